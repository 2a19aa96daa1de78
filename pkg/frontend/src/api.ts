/**
 * Thin typed client over the documented HTTP API.  The fetch function is
 * injectable so view logic can be exercised against a scripted server.
 */

import type { AnnotationPayload, CurvePoint, DocumentDetail, DocumentSummary,
              MentionOut, QueueEntry, RelationOut } from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, public body: { error?: string; detail?: string }) {
    super(`${status}: ${body.error ?? "error"} ${body.detail ?? ""}`);
  }
}

export class Client {
  constructor(private fetchFn: FetchLike = fetch.bind(globalThis),
              private base: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchFn(this.base + path, {
      headers: { "Content-Type": "application/json" },
      ...init,
    });
    const body = await res.json().catch(() => ({}));
    if (!res.ok) throw new ApiError(res.status, body);
    return body as T;
  }

  listDocuments(page = 1, pageSize = 50): Promise<{
    total: number; documents: DocumentSummary[];
  }> {
    return this.request(`/api/documents?page=${page}&page_size=${pageSize}`);
  }

  getDocument(id: string): Promise<DocumentDetail> {
    return this.request(`/api/documents/${encodeURIComponent(id)}`);
  }

  putAnnotations(id: string, payload: AnnotationPayload & { revision: string }):
      Promise<{ annotations: AnnotationPayload; revision: string }> {
    return this.request(`/api/documents/${encodeURIComponent(id)}/annotations`, {
      method: "PUT",
      body: JSON.stringify(payload),
    });
  }

  predict(input: { doc_id?: string; text?: string }): Promise<{
    doc_id: string; text: string; mentions: MentionOut[]; relations: RelationOut[];
  }> {
    return this.request("/api/predict", { method: "POST", body: JSON.stringify(input) });
  }

  reviewQueue(): Promise<{ queue: QueueEntry[] }> {
    return this.request("/api/review/queue");
  }

  review(docId: string, verdict: "accept" | "reject" | "edit",
         annotations?: AnnotationPayload, note?: string): Promise<{ status: string }> {
    return this.request(`/api/review/${encodeURIComponent(docId)}`, {
      method: "POST",
      body: JSON.stringify({ verdict, annotations, note }),
    });
  }

  listRuns(): Promise<{ runs: string[] }> {
    return this.request("/api/runs");
  }

  runCurve(run: string): Promise<{ ner: CurvePoint[] | null; rel: CurvePoint[] | null }> {
    return this.request(`/api/runs/${encodeURIComponent(run)}/curve`);
  }
}
