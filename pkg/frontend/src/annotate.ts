/**
 * Annotation view-model: a pure state machine over the document being
 * annotated.  Every transition returns a fresh state (or an error string),
 * which keeps the whole flow unit-testable without a DOM.  Client-side
 * checks mirror the server invariants (no overlaps, ASP head / OPI tail,
 * head != tail); the server stays authoritative.
 */

import { rangesOverlap, snapToTokens } from "./tokens.js";
import type { AnnotationPayload, DocumentDetail, Entity, EntityLabel, Relation, Token } from "./types.js";

export interface AnnotateState {
  docId: string;
  text: string;
  tokens: Token[];
  entities: Entity[];
  relations: Relation[];
  revision: string;
  pendingHead: number | null; // entity index selected as relation head
  dirty: boolean;
  conflict: boolean; // a save bounced with 409; draft retained
}

export type Transition = { ok: AnnotateState } | { error: string };

export function initState(doc: DocumentDetail): AnnotateState {
  return {
    docId: doc.id,
    text: doc.text,
    tokens: doc.tokens,
    entities: doc.annotations ? [...doc.annotations.entities] : [],
    relations: doc.annotations ? [...doc.annotations.relations] : [],
    revision: doc.revision,
    pendingHead: null,
    dirty: false,
    conflict: false,
  };
}

/** Label a text selection; the selection snaps outward to token bounds. */
export function addEntity(state: AnnotateState, selStart: number, selEnd: number,
                          label: EntityLabel): Transition {
  const snapped = snapToTokens(state.tokens, selStart, selEnd);
  if (snapped === null) return { error: "selection covers no token" };
  for (const ent of state.entities) {
    if (rangesOverlap(snapped, ent)) {
      return { error: "overlaps an existing mention" };
    }
  }
  const entity: Entity = { start: snapped.start, end: snapped.end, label };
  const entities = [...state.entities, entity].sort((a, b) => a.start - b.start);
  // insertion can shift indices: remap relation endpoints by object identity
  const remap = (i: number) => entities.indexOf(state.entities[i]);
  const relations = state.relations.map((r) => ({
    ...r, head: remap(r.head), tail: remap(r.tail),
  }));
  return { ok: { ...state, entities, relations, dirty: true, pendingHead: null } };
}

export function removeEntity(state: AnnotateState, index: number): Transition {
  if (index < 0 || index >= state.entities.length) return { error: "no such mention" };
  const entities = state.entities.filter((_, i) => i !== index);
  const relations: Relation[] = [];
  for (const r of state.relations) {
    if (r.head === index || r.tail === index) continue; // cascades away
    relations.push({
      ...r,
      head: r.head > index ? r.head - 1 : r.head,
      tail: r.tail > index ? r.tail - 1 : r.tail,
    });
  }
  return { ok: { ...state, entities, relations, dirty: true, pendingHead: null } };
}

/** First click of the relation gesture: remember the head mention. */
export function startRelation(state: AnnotateState, index: number): Transition {
  if (index < 0 || index >= state.entities.length) return { error: "no such mention" };
  return { ok: { ...state, pendingHead: index } };
}

/** Second click: create head -> tail if the gold invariants allow it. */
export function completeRelation(state: AnnotateState, tailIndex: number): Transition {
  const head = state.pendingHead;
  if (head === null) return { error: "pick the aspect mention first" };
  if (tailIndex < 0 || tailIndex >= state.entities.length) return { error: "no such mention" };
  if (head === tailIndex) return { error: "a relation needs two distinct mentions" };
  if (state.entities[head].label !== "ASP") return { error: "relation head must be ASP" };
  if (state.entities[tailIndex].label !== "OPI") return { error: "relation tail must be OPI" };
  if (state.relations.some((r) => r.head === head && r.tail === tailIndex)) {
    return { error: "relation already exists" };
  }
  const relations = [...state.relations, { head, tail: tailIndex, label: "ASP-OPI" as const }];
  return { ok: { ...state, relations, pendingHead: null, dirty: true } };
}

export function removeRelation(state: AnnotateState, index: number): Transition {
  if (index < 0 || index >= state.relations.length) return { error: "no such relation" };
  return {
    ok: {
      ...state,
      relations: state.relations.filter((_, i) => i !== index),
      dirty: true,
    },
  };
}

/** The PUT body for a save attempt. */
export function savePayload(state: AnnotateState): AnnotationPayload & { revision: string } {
  return { revision: state.revision, entities: state.entities, relations: state.relations };
}

/** Server accepted the save: adopt its canonical form and revision. */
export function applySaved(state: AnnotateState,
                           canonical: AnnotationPayload, revision: string): AnnotateState {
  return {
    ...state,
    entities: [...canonical.entities],
    relations: [...canonical.relations],
    revision,
    dirty: false,
    conflict: false,
  };
}

/** Server said 409: keep the local draft, flag the conflict. */
export function applyConflict(state: AnnotateState): AnnotateState {
  return { ...state, conflict: true };
}

/** User chose to retry after a conflict: take the server's new revision
 *  token but keep every local edit (no data loss). */
export function adoptServerRevision(state: AnnotateState, revision: string): AnnotateState {
  return { ...state, revision, conflict: false };
}

/** User chose to discard the draft after a conflict. */
export function discardDraft(state: AnnotateState, doc: DocumentDetail): AnnotateState {
  return initState(doc);
}
