/**
 * Thin clients for the two localhost backends. The console never talks
 * crypto: the patient agent decrypts and decides, the practitioner agent
 * submits and retrieves; this layer only moves JSON.
 *
 * `fetch` is injectable so tests can script both backends.
 */

export type Fetcher = (url: string, init?: RequestInit) => Promise<Response>;

export interface MatchedDoc {
  doc_id: string;
  filename: string;
}

export interface PendingRequest {
  request_id: string;
  practitioner_id: string;
  submitted_at: string;
  matched: MatchedDoc[];
}

export interface GrantRow {
  request_id: string;
  patient_id: string;
  practitioner_id: string;
  status: string;
  submitted_at: string;
}

export interface ConsoleConfig {
  mode: "patient" | "practitioner";
  principal: string;
  proxy: string;
}

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(detail);
    this.name = "ApiError";
  }
}

async function call<T>(fetcher: Fetcher, base: string, path: string,
                       init?: RequestInit): Promise<T> {
  const response = await fetcher(`${base}${path}`, init);
  if (!response.ok) {
    let detail = `HTTP ${response.status}`;
    try {
      const body = (await response.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

function post(body: unknown): RequestInit {
  return {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  };
}

export class PatientAgentApi {
  constructor(private fetcher: Fetcher, private base = "") {}

  config(): Promise<ConsoleConfig> {
    return call(this.fetcher, this.base, "/config");
  }

  pending(): Promise<PendingRequest[]> {
    return call<{ pending: PendingRequest[] }>(this.fetcher, this.base, "/pending")
      .then((r) => r.pending);
  }

  grant(requestId: string, docIds: string[]): Promise<unknown> {
    return call(this.fetcher, this.base, "/grant",
                post({ request_id: requestId, doc_ids: docIds }));
  }

  decline(requestId: string): Promise<unknown> {
    return call(this.fetcher, this.base, "/decline", post({ request_id: requestId }));
  }

  revoke(scope: { request_id?: string; practitioner_id?: string }): Promise<{ revoked: number }> {
    return call(this.fetcher, this.base, "/revoke", post(scope));
  }

  grants(): Promise<GrantRow[]> {
    return call<{ grants: GrantRow[] }>(this.fetcher, this.base, "/grants")
      .then((r) => r.grants);
  }
}

export class WorkbenchApi {
  constructor(private fetcher: Fetcher, private base = "") {}

  config(): Promise<ConsoleConfig> {
    return call(this.fetcher, this.base, "/config");
  }

  submit(patientId: string, expression: string): Promise<{ request_id: string }> {
    return call(this.fetcher, this.base, "/submit",
                post({ patient_id: patientId, expression }));
  }

  requests(): Promise<GrantRow[]> {
    return call<{ requests: GrantRow[] }>(this.fetcher, this.base, "/requests")
      .then((r) => r.requests);
  }

  retrieve(requestId: string, outDir: string): Promise<{ files: string[] }> {
    return call(this.fetcher, this.base, "/retrieve",
                post({ request_id: requestId, out_dir: outDir }));
  }
}
