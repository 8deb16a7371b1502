export const EDIT_MODES = ["freeform", "addition", "removal", "replace"] as const;
export const SEMANTICS_SCOPES = ["full", "bbox"] as const;

export type EditMode = (typeof EDIT_MODES)[number];
export type SemanticsScope = (typeof SEMANTICS_SCOPES)[number];

export interface EditRequest {
  image: string; // base64 PNG, RGB
  painted_labels: string; // base64 PNG, single channel, 255 = untouched
  mode: EditMode;
  semantics_scope: SemanticsScope;
}

export interface EditResponse {
  image: string;
  mask: string;
  latency_ms: number;
  model_version: string;
  mode: string;
  semantics_scope: string;
}

export interface ClassesInfo {
  num_classes: number;
  names: string[];
  palette: [number, number, number][];
}

export interface HealthInfo {
  status: string;
  model_version: string;
}

/** status 0 means the request never reached the server. */
export class ApiError extends Error {
  constructor(readonly status: number, readonly detail: string) {
    super(detail);
    this.name = "ApiError";
  }
}

async function errorDetail(res: Response): Promise<string> {
  try {
    const body = (await res.json()) as { detail?: unknown };
    if (typeof body.detail === "string") return body.detail;
    if (body.detail !== undefined) return JSON.stringify(body.detail);
  } catch {
    // non-JSON error body; fall through
  }
  return `HTTP ${res.status}`;
}

export class EditClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let res: Response;
    try {
      res = await this.fetchFn(this.baseUrl + path, init);
    } catch (err) {
      throw new ApiError(0, `server unreachable: ${err instanceof Error ? err.message : String(err)}`);
    }
    if (!res.ok) throw new ApiError(res.status, await errorDetail(res));
    return (await res.json()) as T;
  }

  health(): Promise<HealthInfo> {
    return this.request<HealthInfo>("/health");
  }

  classes(): Promise<ClassesInfo> {
    return this.request<ClassesInfo>("/classes");
  }

  edit(req: EditRequest): Promise<EditResponse> {
    return this.request<EditResponse>("/edit", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(req),
    });
  }
}
