// Thin typed client over the gateway JSON API. No retries: a failed
// mutation surfaces to the caller, which re-fetches and re-renders.

import type {
  Alternative,
  Diagnostic,
  MatchEntry,
  Question,
  ServerConfig,
  SessionInfo,
  Subject,
  ValueMatchTable,
} from './types.js';

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    detail: string,
  ) {
    super(detail || code);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = '',
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(this.baseUrl + path, {
        method,
        headers: body === undefined ? undefined : { 'Content-Type': 'application/json' },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ApiError(0, 'unreachable', `server unreachable: ${String(err)}`);
    }
    if (!response.ok) {
      let code = 'error';
      let detail = `${response.status}`;
      try {
        const parsed = (await response.json()) as { error?: string; detail?: string };
        code = parsed.error ?? code;
        detail = parsed.detail ?? detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, code, detail);
    }
    return (await response.json()) as T;
  }

  private get<T>(path: string): Promise<T> {
    return this.request<T>('GET', path);
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>('POST', path, body);
  }

  config(): Promise<ServerConfig> {
    return this.get('/config');
  }

  createSession(body: {
    vocabulary?: unknown;
    vocabulary_path?: string;
    method?: string;
  }): Promise<SessionInfo> {
    return this.post('/sessions', body);
  }

  session(id: string): Promise<SessionInfo> {
    return this.get(`/sessions/${id}`);
  }

  uploadTable(
    id: string,
    body: { name?: string; csv_text?: string; path?: string; columns?: string[] },
  ): Promise<{ table: string; columns: string[]; rows: number }> {
    return this.post(`/sessions/${id}/tables`, body);
  }

  matchSchema(id: string, method?: string): Promise<{ matches: MatchEntry[] }> {
    return this.post(`/sessions/${id}/match-schema`, method ? { method } : {});
  }

  matches(id: string): Promise<{ matches: MatchEntry[]; value_tables: ValueMatchTable[] }> {
    return this.get(`/sessions/${id}/matches`);
  }

  alternatives(id: string, column: string, k = 10): Promise<{ alternatives: Alternative[] }> {
    return this.get(`/sessions/${id}/matches/${encodeURIComponent(column)}/alternatives?k=${k}`);
  }

  decide(
    id: string,
    subject: Subject,
    verdict: 'keep' | 'replace',
    target?: string,
  ): Promise<unknown> {
    return this.post(`/sessions/${id}/decisions`, { subject, verdict, target });
  }

  matchValues(id: string, sourceColumns: string[]): Promise<{ value_tables: ValueMatchTable[] }> {
    return this.post(`/sessions/${id}/match-values`, { source_columns: sourceColumns });
  }

  questions(id: string): Promise<{ questions: Question[] }> {
    return this.get(`/sessions/${id}/questions`);
  }

  answer(id: string, questionId: string, answer: string): Promise<unknown> {
    return this.post(`/sessions/${id}/answers`, { question_id: questionId, answer });
  }

  buildSpec(id: string): Promise<{ entries: number; artifact: string; diagnostics: Diagnostic[] }> {
    return this.post(`/sessions/${id}/spec`, {});
  }

  materialize(id: string): Promise<{ table: string; rows: number; artifacts: string[] }> {
    return this.post(`/sessions/${id}/materialize`, {});
  }

  provenance(id: string): Promise<{ records: Array<{ seq: number; kind: string }> }> {
    return this.get(`/sessions/${id}/provenance`);
  }

  artifactUrl(id: string, name: string): string {
    return `${this.baseUrl}/sessions/${id}/artifacts/${encodeURIComponent(name)}`;
  }

  async artifactBytes(id: string, name: string): Promise<Uint8Array> {
    const response = await this.fetchImpl(this.artifactUrl(id, name), { method: 'GET' });
    if (!response.ok) {
      throw new ApiError(response.status, 'error', `artifact ${name}: ${response.status}`);
    }
    return new Uint8Array(await response.arrayBuffer());
  }
}
