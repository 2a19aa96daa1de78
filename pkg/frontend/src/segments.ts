/**
 * Split a document's text into renderable segments: plain stretches and
 * entity-covered stretches (with the entity index for styling/clicks).
 * Entities are char spans, non-overlapping, any order.
 */

import type { Entity } from "./types.js";

export interface Segment {
  text: string;
  start: number;
  entity: number | null; // index into the entities array
}

export function segments(text: string, entities: Entity[]): Segment[] {
  const order = entities
    .map((e, i) => ({ e, i }))
    .sort((a, b) => a.e.start - b.e.start);
  const out: Segment[] = [];
  let pos = 0;
  for (const { e, i } of order) {
    if (e.start > pos) out.push({ text: text.slice(pos, e.start), start: pos, entity: null });
    out.push({ text: text.slice(e.start, e.end), start: e.start, entity: i });
    pos = e.end;
  }
  if (pos < text.length) out.push({ text: text.slice(pos), start: pos, entity: null });
  return out;
}
