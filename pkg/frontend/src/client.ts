/**
 * Thin typed wrapper over the control-plane HTTP API: login, trial
 * administration, per-actor feature assignment, and log download.
 * Realtime traffic goes over the websocket instead (see session.ts).
 */

export interface LoginResult {
  token: string;
  userId: string;
  role: string;
  expiresAt: number;
}

export interface TrialMember {
  actorId: string;
  role: string;
  displayName: string;
}

export interface TrialInfo {
  trialId: string;
  name: string;
  status: string;
  createdAt: number;
  members: TrialMember[];
  features: Record<string, string[]>;
}

/** Error body shape every non-2xx response carries: {code, message, ...}. */
export class ApiError extends Error {
  readonly code: string;
  readonly status: number;
  readonly details: Record<string, unknown>;

  constructor(code: string, message: string, status: number, details: Record<string, unknown>) {
    super(message);
    this.name = "ApiError";
    this.code = code;
    this.status = status;
    this.details = details;
  }
}

export class AdminClient {
  readonly baseUrl: string;
  private token: string | null = null;

  constructor(baseUrl: string, token?: string) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    if (token !== undefined) this.token = token;
  }

  setToken(token: string): void {
    this.token = token;
  }

  async health(): Promise<boolean> {
    try {
      const res = await fetch(`${this.baseUrl}/healthz`);
      return res.ok;
    } catch {
      return false;
    }
  }

  async login(userId: string, password: string, trialId?: string): Promise<LoginResult> {
    const body: Record<string, unknown> = { userId, password };
    if (trialId !== undefined) body.trialId = trialId;
    const result = (await this.request("POST", "/auth/login", body, false)) as LoginResult;
    this.token = result.token;
    return result;
  }

  async createTrial(
    name: string,
    options: { trialId?: string; features?: Record<string, string[]> } = {},
  ): Promise<TrialInfo> {
    const body: Record<string, unknown> = { name };
    if (options.trialId !== undefined) body.trialId = options.trialId;
    if (options.features !== undefined) body.features = options.features;
    return (await this.request("POST", "/trials", body)) as TrialInfo;
  }

  async listTrials(): Promise<TrialInfo[]> {
    const result = (await this.request("GET", "/trials")) as { trials: TrialInfo[] };
    return result.trials;
  }

  async deleteTrial(trialId: string): Promise<TrialInfo> {
    return (await this.request(
      "DELETE",
      `/trials/${encodeURIComponent(trialId)}`,
    )) as TrialInfo;
  }

  async assignFeatures(
    trialId: string,
    actorId: string,
    features: string[],
  ): Promise<string[]> {
    const result = (await this.request(
      "POST",
      `/trials/${encodeURIComponent(trialId)}/features`,
      { actorId, features },
    )) as { features: string[] };
    return result.features;
  }

  /** Raw RFC-4180 CSV text of the trial's event log. */
  async fetchLogCsv(trialId: string): Promise<string> {
    const res = await fetch(
      `${this.baseUrl}/trials/${encodeURIComponent(trialId)}/log.csv`,
      { headers: this.headers(false) },
    );
    if (!res.ok) throw await toApiError(res);
    return res.text();
  }

  logCsvUrl(trialId: string): string {
    return `${this.baseUrl}/trials/${encodeURIComponent(trialId)}/log.csv`;
  }

  private headers(json = true): Record<string, string> {
    const headers: Record<string, string> = {};
    if (json) headers["content-type"] = "application/json";
    if (this.token !== null) headers.authorization = `Bearer ${this.token}`;
    return headers;
  }

  private async request(
    method: string,
    path: string,
    body?: unknown,
    authenticated = true,
  ): Promise<unknown> {
    const init: RequestInit = { method, headers: this.headers() };
    if (!authenticated) {
      delete (init.headers as Record<string, string>).authorization;
    }
    if (body !== undefined) init.body = JSON.stringify(body);
    const res = await fetch(`${this.baseUrl}${path}`, init);
    if (!res.ok) throw await toApiError(res);
    return res.json();
  }
}

async function toApiError(res: Response): Promise<ApiError> {
  let code = "HTTP_ERROR";
  let message = `${res.status} ${res.statusText}`;
  let details: Record<string, unknown> = {};
  try {
    const parsed = (await res.json()) as Record<string, unknown>;
    if (typeof parsed.code === "string") code = parsed.code;
    if (typeof parsed.message === "string") message = parsed.message;
    const { code: _c, message: _m, ...rest } = parsed;
    details = rest;
  } catch {
    // non-JSON error body: keep the status-line message
  }
  return new ApiError(code, message, res.status, details);
}
