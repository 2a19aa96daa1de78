/**
 * Thin typed client over the documented HTTP API.  The fetch function is
 * injectable so view logic can be exercised against a scripted server.
 */
export class ApiError extends Error {
    constructor(status, body) {
        super(`${status}: ${body.error ?? "error"} ${body.detail ?? ""}`);
        this.status = status;
        this.body = body;
    }
}
export class Client {
    constructor(fetchFn = fetch.bind(globalThis), base = "") {
        this.fetchFn = fetchFn;
        this.base = base;
    }
    async request(path, init) {
        const res = await this.fetchFn(this.base + path, {
            headers: { "Content-Type": "application/json" },
            ...init,
        });
        const body = await res.json().catch(() => ({}));
        if (!res.ok)
            throw new ApiError(res.status, body);
        return body;
    }
    listDocuments(page = 1, pageSize = 50) {
        return this.request(`/api/documents?page=${page}&page_size=${pageSize}`);
    }
    getDocument(id) {
        return this.request(`/api/documents/${encodeURIComponent(id)}`);
    }
    putAnnotations(id, payload) {
        return this.request(`/api/documents/${encodeURIComponent(id)}/annotations`, {
            method: "PUT",
            body: JSON.stringify(payload),
        });
    }
    predict(input) {
        return this.request("/api/predict", { method: "POST", body: JSON.stringify(input) });
    }
    reviewQueue() {
        return this.request("/api/review/queue");
    }
    review(docId, verdict, annotations, note) {
        return this.request(`/api/review/${encodeURIComponent(docId)}`, {
            method: "POST",
            body: JSON.stringify({ verdict, annotations, note }),
        });
    }
    listRuns() {
        return this.request("/api/runs");
    }
    runCurve(run) {
        return this.request(`/api/runs/${encodeURIComponent(run)}/curve`);
    }
}
