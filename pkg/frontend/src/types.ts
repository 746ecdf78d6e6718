// Wire types mirroring the gateway's JSON API.

export interface MatchEntry {
  source: string;
  target: string | null;
  score: number;
  method: string;
  corrected: boolean;
  corrected_from?: string | null;
}

export interface ValueMatchTable {
  source_column: string;
  target_attribute: string;
  skipped: boolean;
  matches: MatchEntry[];
}

export interface Alternative {
  target: string;
  score: number;
}

export interface Question {
  question_id: string;
  text: string;
  options: string[];
  regarding: Record<string, unknown> | null;
  status: 'open' | 'closed';
  answer: string | null;
}

export interface Diagnostic {
  severity: 'error' | 'warning' | 'info';
  entry: number | null;
  message: string;
}

export interface SessionInfo {
  session_id: string;
  phase: string;
  tables: string[];
  pending_questions: number;
  artifacts: string[];
}

export interface ServerConfig {
  low_score_threshold: number;
  default_vocabulary: string | null;
}

export type Subject =
  | { kind: 'column'; column: string }
  | { kind: 'value'; column: string; value: string }
  | { kind: 'conflict'; target: string; columns: string[] };

/** Everything the UI renders; always assembled from server responses. */
export interface SessionView {
  sessionId: string | null;
  phase: string;
  matches: MatchEntry[];
  valueTables: ValueMatchTable[];
  alternatives: Record<string, Alternative[]>;
  questions: Question[];
  diagnostics: Diagnostic[];
  artifacts: string[];
  banner: string | null;
  busy: boolean;
}

export function emptyView(): SessionView {
  return {
    sessionId: null,
    phase: 'created',
    matches: [],
    valueTables: [],
    alternatives: {},
    questions: [],
    diagnostics: [],
    artifacts: [],
    banner: null,
    busy: false,
  };
}
