/**
 * A scripted in-memory server implementing the annotation API contract:
 * canonicalization (entities sorted by start, relations remapped), content
 * revisions, and 409 on stale writes.  Used to exercise the client state
 * machine end to end without a running backend.
 */

import type { AnnotationPayload, Entity, Relation, Token } from "../src/types.js";
import type { FetchLike } from "../src/api.js";

export function whitespaceTokens(text: string): Token[] {
  const tokens: Token[] = [];
  const re = /\S+/g;
  let match: RegExpExecArray | null;
  while ((match = re.exec(text)) !== null) {
    tokens.push({ surface: match[0], start: match.index, end: match.index + match[0].length });
  }
  return tokens;
}

function canonicalize(payload: AnnotationPayload): AnnotationPayload {
  const order = payload.entities
    .map((e, i) => ({ e, i }))
    .sort((a, b) => a.e.start - b.e.start);
  const remap = new Map(order.map(({ i }, rank) => [i, rank] as const));
  const entities: Entity[] = order.map(({ e }) => ({ ...e }));
  const relations: Relation[] = payload.relations.map((r) => ({
    head: remap.get(r.head)!,
    tail: remap.get(r.tail)!,
    label: r.label,
  }));
  return { entities, relations };
}

function revisionOf(stored: AnnotationPayload | null): string {
  if (stored === null) return "";
  let hash = 0;
  for (const ch of JSON.stringify(stored)) {
    hash = (hash * 31 + ch.charCodeAt(0)) >>> 0;
  }
  return hash.toString(16);
}

export class MockServer {
  stored: AnnotationPayload | null = null;
  putCount = 0;

  constructor(private docId: string, private text: string) {}

  /** Simulate a concurrent edit landing on the server. */
  externalEdit(payload: AnnotationPayload): void {
    this.stored = canonicalize(payload);
  }

  get revision(): string {
    return revisionOf(this.stored);
  }

  fetchFn: FetchLike = async (input, init) => {
    const url = typeof input === "string" ? input : String(input);
    const json = (body: unknown, status = 200) =>
      new Response(JSON.stringify(body), {
        status,
        headers: { "Content-Type": "application/json", "X-AOML-Version": "1" },
      });

    if (url.endsWith(`/api/documents/${this.docId}`) && (!init || !init.method)) {
      return json({
        id: this.docId,
        text: this.text,
        tokens: whitespaceTokens(this.text),
        annotations: this.stored
          ? { id: this.docId, text: this.text, ...this.stored }
          : null,
        revision: this.revision,
      });
    }
    if (url.endsWith(`/api/documents/${this.docId}/annotations`) && init?.method === "PUT") {
      this.putCount += 1;
      const body = JSON.parse(String(init.body)) as AnnotationPayload & { revision: string };
      if ((body.revision ?? "") !== this.revision) {
        return json({ error: "StaleRevision", detail: "reload" }, 409);
      }
      for (const a of body.entities) {
        for (const b of body.entities) {
          if (a !== b && a.start < b.end && b.start < a.end) {
            return json({ error: "OverlappingMentions", detail: "overlap" }, 400);
          }
        }
      }
      this.stored = canonicalize({ entities: body.entities, relations: body.relations });
      return json({
        annotations: { id: this.docId, text: this.text, ...this.stored },
        revision: this.revision,
      });
    }
    return json({ error: "NotFound", detail: url }, 404);
  };
}
