// Session controller: one HTTP mutation per user action, then a full
// re-fetch. The view is always rebuilt from server responses; nothing is
// invented locally.

import { ApiClient, ApiError } from './api.js';
import { emptyView, type SessionView, type Subject } from './types.js';

export class SessionController {
  view: SessionView = emptyView();
  lowScoreThreshold = 0.5;
  onChange: (view: SessionView) => void = () => {};

  constructor(private readonly api: ApiClient) {}

  private emit(): void {
    this.onChange(this.view);
  }

  private async mutate<T>(action: () => Promise<T>): Promise<T | undefined> {
    // pessimistic: one mutation in flight, no silent retries
    if (this.view.busy) return undefined;
    this.view = { ...this.view, busy: true, banner: null };
    this.emit();
    try {
      const result = await action();
      await this.refresh();
      return result;
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // wrong phase or already-answered: reconcile with the server
        await this.refresh();
        this.view = { ...this.view, banner: `Out of step with the server: ${err.message}` };
      } else if (err instanceof ApiError && err.status === 0) {
        this.view = { ...this.view, busy: false, banner: err.message };
      } else {
        await this.refresh();
        this.view = { ...this.view, banner: err instanceof Error ? err.message : String(err) };
      }
      this.emit();
      return undefined;
    }
  }

  async loadConfig(): Promise<void> {
    try {
      const config = await this.api.config();
      this.lowScoreThreshold = config.low_score_threshold;
    } catch {
      // keep the default; the banner will surface real connectivity issues
    }
  }

  /** Re-derive the whole view from the server. Pure read: no mutations. */
  async refresh(): Promise<void> {
    const id = this.view.sessionId;
    if (id === null) {
      this.view = { ...emptyView(), banner: this.view.banner };
      this.emit();
      return;
    }
    try {
      const [info, matches, questions] = await Promise.all([
        this.api.session(id),
        this.api.matches(id),
        this.api.questions(id),
      ]);
      this.view = {
        sessionId: id,
        phase: info.phase,
        matches: matches.matches,
        valueTables: matches.value_tables,
        alternatives: this.view.alternatives,
        questions: questions.questions,
        diagnostics: this.view.diagnostics,
        artifacts: info.artifacts,
        banner: null,
        busy: false,
      };
    } catch (err) {
      this.view = {
        ...this.view,
        busy: false,
        banner: err instanceof ApiError && err.status === 0
          ? err.message
          : `refresh failed: ${err instanceof Error ? err.message : String(err)}`,
      };
    }
    this.emit();
  }

  async createSession(vocabulary: unknown): Promise<void> {
    await this.mutate(async () => {
      const info = await this.api.createSession({ vocabulary });
      this.view = { ...this.view, sessionId: info.session_id };
    });
  }

  async createSessionFromPath(vocabularyPath: string): Promise<void> {
    await this.mutate(async () => {
      const info = await this.api.createSession({ vocabulary_path: vocabularyPath });
      this.view = { ...this.view, sessionId: info.session_id };
    });
  }

  async uploadCsv(name: string, csvText: string, columns?: string[]): Promise<void> {
    await this.mutate(() =>
      this.api.uploadTable(this.requireSession(), { name, csv_text: csvText, columns }),
    );
  }

  async matchSchema(): Promise<void> {
    await this.mutate(() => this.api.matchSchema(this.requireSession()));
  }

  /** Pure read; fills the alternatives drawer for one column. */
  async fetchAlternatives(column: string, k = 10): Promise<void> {
    const id = this.requireSession();
    const result = await this.api.alternatives(id, column, k);
    this.view = {
      ...this.view,
      alternatives: { ...this.view.alternatives, [column]: result.alternatives },
    };
    this.emit();
  }

  async accept(subject: Subject): Promise<void> {
    await this.mutate(() => this.api.decide(this.requireSession(), subject, 'keep'));
  }

  async replace(subject: Subject, target: string): Promise<void> {
    await this.mutate(() => this.api.decide(this.requireSession(), subject, 'replace', target));
  }

  async matchValues(sourceColumns: string[]): Promise<void> {
    await this.mutate(() => this.api.matchValues(this.requireSession(), sourceColumns));
  }

  async answer(questionId: string, answer: string): Promise<void> {
    await this.mutate(() => this.api.answer(this.requireSession(), questionId, answer));
  }

  async buildSpec(): Promise<void> {
    await this.mutate(async () => {
      const result = await this.api.buildSpec(this.requireSession());
      this.view = { ...this.view, diagnostics: result.diagnostics };
      return result;
    });
  }

  async materialize(): Promise<void> {
    const errors = this.view.diagnostics.filter((d) => d.severity === 'error');
    if (errors.length > 0) {
      this.view = {
        ...this.view,
        banner: `Materialization blocked by ${errors.length} validation error(s)`,
      };
      this.emit();
      return;
    }
    await this.mutate(() => this.api.materialize(this.requireSession()));
  }

  artifactUrl(name: string): string {
    return this.api.artifactUrl(this.requireSession(), name);
  }

  private requireSession(): string {
    if (this.view.sessionId === null) {
      throw new ApiError(0, 'no_session', 'no active session');
    }
    return this.view.sessionId;
  }
}
