/**
 * End-to-end client/state round trip against the scripted server:
 * annotating "great value for money" as OPI saves a server-canonical
 * annotation that reloads identically, and a 409 conflict preserves the
 * local draft.
 */

import { describe, expect, it } from "vitest";

import { ApiError, Client } from "../src/api.js";
import {
  addEntity, adoptServerRevision, applyConflict, applySaved, completeRelation,
  initState, savePayload, startRelation,
} from "../src/annotate.js";
import type { AnnotateState } from "../src/annotate.js";
import { MockServer } from "./mockserver.js";

const TEXT = "the camera has great value for money";

function must(t: { ok: AnnotateState } | { error: string }): AnnotateState {
  if ("error" in t) throw new Error(t.error);
  return t.ok;
}

describe("annotation round trip", () => {
  it("saved annotation is canonical and reloads identically", async () => {
    const server = new MockServer("d1", TEXT);
    const api = new Client(server.fetchFn);

    let state = initState(await api.getDocument("d1"));
    // select the phrase "great value for money" (chars 15..36) -> OPI
    state = must(addEntity(state, 15, 36, "OPI"));
    expect(state.entities).toEqual([{ start: 15, end: 36, label: "OPI" }]);
    // tag "camera" -> ASP and relate camera -> the opinion phrase
    state = must(addEntity(state, 4, 10, "ASP"));
    state = must(startRelation(state, 0));
    state = must(completeRelation(state, 1));

    const saved = await api.putAnnotations("d1", savePayload(state));
    state = applySaved(state, saved.annotations, saved.revision);
    expect(state.dirty).toBe(false);

    // reload from scratch: identical canonical annotation and revision
    const reloaded = initState(await api.getDocument("d1"));
    expect(reloaded.entities).toEqual(state.entities);
    expect(reloaded.relations).toEqual(state.relations);
    expect(reloaded.revision).toBe(state.revision);
    expect(reloaded.entities).toEqual([
      { start: 4, end: 10, label: "ASP" },
      { start: 15, end: 36, label: "OPI" },
    ]);
    expect(reloaded.relations).toEqual([{ head: 0, tail: 1, label: "ASP-OPI" }]);
  });

  it("409 conflict preserves the local draft and can be retried", async () => {
    const server = new MockServer("d1", TEXT);
    const api = new Client(server.fetchFn);

    let state = initState(await api.getDocument("d1"));
    state = must(addEntity(state, 15, 36, "OPI"));
    const draftEntities = [...state.entities];

    // someone else saves first: our revision token goes stale
    server.externalEdit({
      entities: [{ start: 4, end: 10, label: "ASP" }],
      relations: [],
    });

    let conflict: ApiError | null = null;
    try {
      await api.putAnnotations("d1", savePayload(state));
    } catch (err) {
      conflict = err as ApiError;
    }
    expect(conflict).not.toBeNull();
    expect(conflict!.status).toBe(409);

    state = applyConflict(state);
    expect(state.conflict).toBe(true);
    expect(state.entities).toEqual(draftEntities); // nothing lost

    // user opts to retry: adopt the server's revision, keep the draft
    const fresh = await api.getDocument("d1");
    state = adoptServerRevision(state, fresh.revision);
    expect(state.entities).toEqual(draftEntities);

    const saved = await api.putAnnotations("d1", savePayload(state));
    state = applySaved(state, saved.annotations, saved.revision);
    expect(state.conflict).toBe(false);
    const reloaded = initState(await api.getDocument("d1"));
    expect(reloaded.entities).toEqual(state.entities);
  });

  it("server-side invariant violations surface with their name", async () => {
    const server = new MockServer("d1", TEXT);
    const api = new Client(server.fetchFn);
    let err: ApiError | null = null;
    try {
      await api.putAnnotations("d1", {
        revision: "",
        entities: [{ start: 0, end: 10, label: "OPI" },
                   { start: 4, end: 14, label: "ASP" }],
        relations: [],
      });
    } catch (e) {
      err = e as ApiError;
    }
    expect(err!.status).toBe(400);
    expect(err!.body.error).toBe("OverlappingMentions");
  });
});
