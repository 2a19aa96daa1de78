/**
 * Token snapping: the client-side mirror of the server's outward-snap
 * alignment, so selections sent to the server land exactly on token
 * boundaries and the server's snap rule rarely has anything to do.
 */
/** Expand an arbitrary character selection outward to whole tokens.
 *  Returns null when the selection overlaps no token (whitespace only). */
export function snapToTokens(tokens, start, end) {
    if (end < start)
        [start, end] = [end, start];
    if (start === end)
        end = start + 1; // treat a caret as a 1-char probe
    let first = null;
    let last = null;
    for (const tok of tokens) {
        if (tok.start < end && tok.end > start) {
            if (first === null)
                first = tok;
            last = tok;
        }
    }
    if (first === null || last === null)
        return null;
    return { start: first.start, end: last.end };
}
/** Token index range [from, to) covered by a char range, for highlighting. */
export function tokenIndexRange(tokens, range) {
    let from = -1;
    let to = -1;
    tokens.forEach((tok, i) => {
        if (tok.start < range.end && tok.end > range.start) {
            if (from === -1)
                from = i;
            to = i + 1;
        }
    });
    return from === -1 ? null : { from, to };
}
export function rangesOverlap(a, b) {
    return a.start < b.end && b.start < a.end;
}
