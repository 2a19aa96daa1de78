/**
 * DOM glue: hash-routed views over the pure view-models.
 *   #documents          document picker
 *   #annotate/<doc id>  span/relation annotation
 *   #review             pseudo-label accept/reject queue
 *   #runs               training-curve charts
 */
import { Client, ApiError } from "./api.js";
import { addEntity, adoptServerRevision, applyConflict, applySaved, completeRelation, discardDraft, initState, removeEntity, removeRelation, savePayload, startRelation, } from "./annotate.js";
import { curveSeries, polylinePoints, valueBounds } from "./chart.js";
import { segments } from "./segments.js";
const api = new Client();
const root = () => document.getElementById("app");
function el(tag, attrs = {}, ...children) {
    const node = document.createElement(tag);
    for (const [k, v] of Object.entries(attrs))
        node.setAttribute(k, v);
    node.append(...children);
    return node;
}
function status(message, kind = "ok") {
    const bar = document.getElementById("status");
    bar.textContent = message;
    bar.className = kind;
    if (message)
        setTimeout(() => { bar.textContent = ""; }, 4000);
}
// --- documents view --------------------------------------------------------
async function documentsView() {
    const { documents, total } = await api.listDocuments(1, 200);
    const list = el("ul", { class: "doc-list" });
    for (const doc of documents) {
        const link = el("a", { href: `#annotate/${doc.id}` }, `${doc.id} ${doc.annotated ? "✓" : "•"} `);
        list.append(el("li", {}, link, el("span", { class: "preview" }, doc.preview)));
    }
    root().replaceChildren(el("h2", {}, `documents (${total})`), list);
}
// --- annotation view -------------------------------------------------------
let annotateState = null;
function renderAnnotate() {
    const state = annotateState;
    const textBox = el("div", { class: "text", id: "text-box" });
    for (const seg of segments(state.text, state.entities)) {
        if (seg.entity === null) {
            textBox.append(document.createTextNode(seg.text));
        }
        else {
            const ent = state.entities[seg.entity];
            const isPending = state.pendingHead === seg.entity;
            const span = el("span", {
                class: `mention ${ent.label.toLowerCase()}${isPending ? " pending" : ""}`,
                "data-entity": String(seg.entity),
                title: `${ent.label} [${ent.start},${ent.end})`,
            }, seg.text);
            span.addEventListener("click", (ev) => {
                ev.stopPropagation();
                const idx = seg.entity;
                if (ev.altKey || ev.metaKey) {
                    apply(removeEntity(state, idx));
                }
                else if (state.pendingHead === null) {
                    apply(startRelation(state, idx));
                }
                else {
                    apply(completeRelation(state, idx));
                }
            });
            textBox.append(span);
        }
    }
    const label = (name) => {
        const button = el("button", {}, `tag ${name}`);
        button.addEventListener("click", () => {
            const sel = window.getSelection();
            if (!sel || sel.rangeCount === 0)
                return status("select text first", "err");
            const range = sel.getRangeAt(0);
            const box = document.getElementById("text-box");
            const offsets = selectionOffsets(box, range);
            if (!offsets)
                return status("select text inside the document", "err");
            apply(addEntity(state, offsets.start, offsets.end, name));
            sel.removeAllRanges();
        });
        return button;
    };
    const relations = el("ul", { class: "relations" });
    state.relations.forEach((rel, i) => {
        const head = state.entities[rel.head];
        const tail = state.entities[rel.tail];
        const kill = el("button", { class: "kill" }, "×");
        kill.addEventListener("click", () => apply(removeRelation(state, i)));
        relations.append(el("li", {}, `${state.text.slice(head.start, head.end)} → ` +
            `${state.text.slice(tail.start, tail.end)} `, kill));
    });
    const save = el("button", { class: "primary" }, state.dirty ? "save *" : "save");
    save.addEventListener("click", saveDraft);
    const conflictBox = state.conflict
        ? el("div", { class: "conflict" }, "document changed on the server; your draft is kept. ", withClick(el("button", {}, "retry with server revision"), async () => {
            const fresh = await api.getDocument(state.docId);
            annotateState = adoptServerRevision(state, fresh.revision);
            renderAnnotate();
        }), withClick(el("button", {}, "discard draft"), async () => {
            const fresh = await api.getDocument(state.docId);
            annotateState = discardDraft(state, fresh);
            renderAnnotate();
        }))
        : el("span", {});
    root().replaceChildren(el("h2", {}, `annotate ${state.docId}`), el("p", { class: "hint" }, "select text, then tag it; click an ASP then an OPI mention to " +
        "relate them; alt-click a mention to delete it"), textBox, el("div", { class: "toolbar" }, label("ASP"), label("OPI"), save), conflictBox, el("h3", {}, "relations"), relations);
}
function withClick(button, handler) {
    button.addEventListener("click", handler);
    return button;
}
/** Character offsets of a DOM selection inside the text box. */
function selectionOffsets(box, range) {
    const measure = (node, offset) => {
        let pos = 0;
        const walker = document.createTreeWalker(box, NodeFilter.SHOW_TEXT);
        let current = walker.nextNode();
        while (current) {
            if (current === node)
                return pos + offset;
            pos += current.textContent.length;
            current = walker.nextNode();
        }
        return null;
    };
    const start = measure(range.startContainer, range.startOffset);
    const end = measure(range.endContainer, range.endOffset);
    if (start === null || end === null || start === end)
        return null;
    return { start, end };
}
function apply(transition) {
    if ("error" in transition)
        return status(transition.error, "err");
    annotateState = transition.ok;
    renderAnnotate();
}
async function saveDraft() {
    const state = annotateState;
    try {
        const saved = await api.putAnnotations(state.docId, savePayload(state));
        annotateState = applySaved(state, saved.annotations, saved.revision);
        status("saved");
    }
    catch (err) {
        if (err instanceof ApiError && err.status === 409) {
            annotateState = applyConflict(state);
            status("conflict: server changed; draft kept", "err");
        }
        else if (err instanceof ApiError) {
            status(`${err.body.error}: ${err.body.detail}`, "err");
        }
        else {
            status(String(err), "err");
        }
    }
    renderAnnotate();
}
async function annotateView(docId) {
    const doc = await api.getDocument(docId);
    annotateState = initState(doc);
    renderAnnotate();
}
// --- review view -----------------------------------------------------------
function confidenceBadge(value) {
    return el("span", { class: "badge" }, `${(value * 100).toFixed(1)}%`);
}
function renderQueueEntry(entry, refresh) {
    const ann = entry.annotation;
    const textBox = el("div", { class: "text" });
    for (const seg of segments(entry.text, ann.entities)) {
        if (seg.entity === null) {
            textBox.append(document.createTextNode(seg.text));
        }
        else {
            const ent = ann.entities[seg.entity];
            textBox.append(el("span", { class: `mention ${ent.label.toLowerCase()}` }, seg.text));
        }
    }
    const rels = el("ul", {});
    ann.relations.forEach((rel, i) => {
        const head = ann.entities[rel.head];
        const tail = ann.entities[rel.tail];
        rels.append(el("li", {}, `${entry.text.slice(head.start, head.end)} → ` +
            `${entry.text.slice(tail.start, tail.end)} `, confidenceBadge(entry.relation_probabilities[i] ?? 0)));
    });
    const verdict = (name) => withClick(el("button", { class: name }, name), async () => {
        await api.review(entry.doc_id, name);
        status(`${entry.doc_id}: ${name}`);
        refresh();
    });
    // edit-then-accept: expose the proposed annotation for correction
    const editor = el("textarea", { class: "edit-area", rows: "6" });
    editor.value = JSON.stringify({ entities: ann.entities, relations: ann.relations }, null, 1);
    const acceptEdited = withClick(el("button", { class: "accept" }, "accept edited"), async () => {
        try {
            await api.review(entry.doc_id, "edit", JSON.parse(editor.value));
            status(`${entry.doc_id}: edited and accepted`);
            refresh();
        }
        catch (err) {
            status(String(err), "err");
        }
    });
    const editBox = el("div", { class: "edit-box" }, editor, acceptEdited);
    editBox.hidden = true;
    const editButton = withClick(el("button", {}, "edit"), () => {
        editBox.hidden = !editBox.hidden;
    });
    return el("div", { class: "queue-entry" }, el("h3", {}, `${entry.doc_id} `, confidenceBadge(entry.mean_confidence)), textBox, rels, el("div", { class: "toolbar" }, verdict("accept"), verdict("reject"), editButton), editBox);
}
async function reviewView() {
    const { queue } = await api.reviewQueue();
    if (queue.length === 0) {
        root().replaceChildren(el("h2", {}, "review"), el("p", { class: "empty" }, "no candidates"));
        return;
    }
    const box = el("div", {});
    for (const entry of queue)
        box.append(renderQueueEntry(entry, () => reviewView()));
    root().replaceChildren(el("h2", {}, `review (${queue.length} candidates)`), box);
}
// --- runs view ---------------------------------------------------------------
function chartNode(title, points) {
    const width = 640;
    const height = 240;
    const series = curveSeries(points);
    const { min, max } = valueBounds(series);
    const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
    svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
    svg.setAttribute("class", "chart");
    for (const s of series) {
        const line = document.createElementNS("http://www.w3.org/2000/svg", "polyline");
        line.setAttribute("points", polylinePoints(s.values, width, height, min, max));
        line.setAttribute("fill", "none");
        line.setAttribute("stroke", s.color);
        line.setAttribute("stroke-width", "1.5");
        svg.append(line);
    }
    const legend = el("div", { class: "legend" });
    for (const s of series) {
        legend.append(el("span", { style: `color:${s.color}` }, `─ ${s.name} `));
    }
    return el("div", { class: "chart-box" }, el("h3", {}, `${title} (${points.length} epochs)`), svg, legend);
}
async function runsView() {
    const { runs } = await api.listRuns();
    const boxes = [el("h2", {}, "training runs")];
    if (runs.length === 0)
        boxes.push(el("p", { class: "empty" }, "no runs yet"));
    for (const run of runs.slice().reverse().slice(0, 5)) {
        const curves = await api.runCurve(run);
        boxes.push(el("h2", { class: "run-name" }, run));
        if (curves.ner)
            boxes.push(chartNode("NER", curves.ner));
        if (curves.rel)
            boxes.push(chartNode("REL", curves.rel));
    }
    root().replaceChildren(...boxes);
}
// --- router ------------------------------------------------------------------
async function route() {
    const hash = window.location.hash || "#documents";
    try {
        if (hash.startsWith("#annotate/")) {
            await annotateView(decodeURIComponent(hash.slice("#annotate/".length)));
        }
        else if (hash === "#review") {
            await reviewView();
        }
        else if (hash === "#runs") {
            await runsView();
        }
        else {
            await documentsView();
        }
    }
    catch (err) {
        root().replaceChildren(el("p", { class: "error" }, String(err)));
    }
}
window.addEventListener("hashchange", route);
window.addEventListener("DOMContentLoaded", route);
