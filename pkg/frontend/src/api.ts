// Typed client for the naming service. All traffic goes through a Transport
// so tests can substitute an in-memory server implementing the same contract.

import type {
  ActivationEntry,
  CategoryInfo,
  CoverageStats,
  NamingDoc,
  Op,
} from "./types.js";

export interface HttpResponse {
  status: number;
  body: unknown;
}

export interface Transport {
  request(method: string, path: string, body?: unknown): Promise<HttpResponse>;
}

export class FetchTransport implements Transport {
  constructor(private readonly baseUrl: string = "") {}

  async request(method: string, path: string, body?: unknown): Promise<HttpResponse> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    let parsed: unknown = null;
    const text = await response.text();
    if (text) {
      try {
        parsed = JSON.parse(text);
      } catch {
        parsed = text;
      }
    }
    return { status: response.status, body: parsed };
  }
}

export class ApiError extends Error {
  constructor(readonly status: number, message: string, readonly detail: unknown) {
    super(message);
  }
}

export class VersionConflictError extends ApiError {
  constructor(status: number, detail: unknown, readonly currentVersion: number) {
    super(status, "version conflict", detail);
  }
}

export class ValidationError extends ApiError {
  constructor(status: number, detail: unknown, readonly violations: string[]) {
    super(status, "naming invariant violation", detail);
  }
}

function raiseForStatus(response: HttpResponse): unknown {
  if (response.status >= 200 && response.status < 300) return response.body;
  const detail = (response.body as { detail?: unknown } | null)?.detail ?? response.body;
  if (response.status === 409) {
    const current = (detail as { current_version?: number } | null)?.current_version ?? -1;
    throw new VersionConflictError(response.status, detail, current);
  }
  if (response.status === 422) {
    const violations = (detail as { violations?: string[] } | null)?.violations ?? [
      String((detail as { message?: string } | null)?.message ?? detail),
    ];
    throw new ValidationError(response.status, detail, violations);
  }
  throw new ApiError(response.status, `request failed with ${response.status}`, detail);
}

export class NamingApi {
  constructor(private readonly transport: Transport) {}

  async categories(): Promise<CategoryInfo[]> {
    const body = raiseForStatus(await this.transport.request("GET", "/categories"));
    return (body as { categories: CategoryInfo[] }).categories;
  }

  async activations(classId: string, annotator?: string): Promise<ActivationEntry[]> {
    const query = annotator ? `?annotator=${encodeURIComponent(annotator)}` : "";
    const body = raiseForStatus(
      await this.transport.request(
        "GET",
        `/categories/${encodeURIComponent(classId)}/activations${query}`,
      ),
    );
    return (body as { activations: ActivationEntry[] }).activations;
  }

  async getNaming(annotator: string, classId: string): Promise<NamingDoc> {
    const body = raiseForStatus(
      await this.transport.request("GET", this.namingPath(annotator, classId)),
    );
    return body as NamingDoc;
  }

  /** Full-document replace; resolves to the new stored version. */
  async putNaming(doc: NamingDoc): Promise<number> {
    const body = raiseForStatus(
      await this.transport.request(
        "PUT",
        this.namingPath(doc.annotator_id, doc.class_id),
        doc,
      ),
    );
    return (body as { version: number }).version;
  }

  /** Fine-grained edit; resolves to the server's updated document. */
  async postOp(
    annotator: string,
    classId: string,
    baseVersion: number,
    op: Op,
  ): Promise<NamingDoc> {
    const body = raiseForStatus(
      await this.transport.request("POST", `${this.namingPath(annotator, classId)}/ops`, {
        base_version: baseVersion,
        op,
      }),
    );
    return body as NamingDoc;
  }

  async stats(annotator: string, classId: string): Promise<CoverageStats> {
    const body = raiseForStatus(
      await this.transport.request(
        "GET",
        `/stats/${encodeURIComponent(annotator)}/${encodeURIComponent(classId)}`,
      ),
    );
    return body as CoverageStats;
  }

  private namingPath(annotator: string, classId: string): string {
    return `/namings/${encodeURIComponent(annotator)}/${encodeURIComponent(classId)}`;
  }
}
