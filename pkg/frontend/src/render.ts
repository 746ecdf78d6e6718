// Pure view rendering: SessionView in, HTML string out. The same snapshot
// always yields the same markup; event wiring happens in main.ts via
// data-action attributes.

import type { Alternative, Question, SessionView } from './types.js';

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;')
    .replace(/'/g, '&#39;');
}

function attr(value: string): string {
  return escapeHtml(value);
}

export function renderBanner(view: SessionView): string {
  if (!view.banner) return '';
  return `<div class="banner" role="alert">${escapeHtml(view.banner)}</div>`;
}

export function renderPhase(view: SessionView): string {
  const phases = ['created', 'tables_loaded', 'schema_matched', 'values_matched', 'spec_built', 'materialized'];
  const steps = phases
    .map((phase) => {
      const cls = phase === view.phase ? 'phase current' : 'phase';
      return `<span class="${cls}">${escapeHtml(phase)}</span>`;
    })
    .join(' &rarr; ');
  return `<nav class="phases">${steps}</nav>`;
}

export function renderMatches(view: SessionView, lowScoreThreshold: number): string {
  if (view.matches.length === 0) {
    return '<section class="matches empty"><p class="empty-state">No column matches yet. Load a table and run schema matching.</p></section>';
  }
  const rows = view.matches
    .map((match) => {
      const low = match.score < lowScoreThreshold ? ' low-score' : '';
      const badge = match.corrected
        ? `<span class="badge corrected" title="corrected">was: ${escapeHtml(match.corrected_from ?? '')}</span>`
        : '';
      const target = match.target === null ? '<em>(dropped)</em>' : escapeHtml(match.target);
      const alternatives = renderAlternatives(match.source, view.alternatives[match.source]);
      return (
        `<tr class="match-row${low}" data-column="${attr(match.source)}">` +
        `<td>${escapeHtml(match.source)}</td>` +
        `<td>${target} ${badge}</td>` +
        `<td class="score">${match.score.toFixed(3)}</td>` +
        `<td>` +
        `<button data-action="alternatives" data-column="${attr(match.source)}">alternatives</button>` +
        `</td>` +
        `</tr>` +
        (alternatives ? `<tr class="alternatives-row"><td colspan="4">${alternatives}</td></tr>` : '')
      );
    })
    .join('');
  return (
    '<section class="matches"><h2>Column matches</h2>' +
    '<table><thead><tr><th>Source column</th><th>Target</th><th>Score</th><th></th></tr></thead>' +
    `<tbody>${rows}</tbody></table></section>`
  );
}

function renderAlternatives(column: string, alternatives: Alternative[] | undefined): string {
  if (!alternatives) return '';
  const items = alternatives
    .map(
      (alt) =>
        `<li><button data-action="replace-column" data-column="${attr(column)}" ` +
        `data-target="${attr(alt.target)}">${escapeHtml(alt.target)}</button> ` +
        `<span class="score">${alt.score.toFixed(3)}</span></li>`,
    )
    .join('');
  return `<ol class="alternatives" data-column="${attr(column)}">${items}</ol>`;
}

export function renderValueTables(view: SessionView): string {
  if (view.valueTables.length === 0) return '';
  const sections = view.valueTables
    .map((table) => {
      if (table.skipped) {
        return (
          `<h3>${escapeHtml(table.source_column)} &rarr; ${escapeHtml(table.target_attribute)}</h3>` +
          '<p class="skipped">skipped (no enumerated domain)</p>'
        );
      }
      const rows = table.matches
        .map((match) => {
          const badge = match.corrected
            ? `<span class="badge corrected">was: ${escapeHtml(match.corrected_from ?? '')}</span>`
            : '';
          return (
            `<tr><td>${escapeHtml(match.source)}</td>` +
            `<td>${escapeHtml(match.target ?? '')} ${badge}</td>` +
            `<td class="score">${match.score.toFixed(3)}</td></tr>`
          );
        })
        .join('');
      return (
        `<h3>${escapeHtml(table.source_column)} &rarr; ${escapeHtml(table.target_attribute)}</h3>` +
        `<table><thead><tr><th>Source value</th><th>Target value</th><th>Score</th></tr></thead>` +
        `<tbody>${rows}</tbody></table>`
      );
    })
    .join('');
  return `<section class="value-tables"><h2>Value matches</h2>${sections}</section>`;
}

export function renderQuestions(view: SessionView): string {
  const open = view.questions.filter((q) => q.status === 'open');
  if (open.length === 0) return '';
  return `<section class="questions"><h2>Questions</h2>${open.map(renderQuestion).join('')}</section>`;
}

function renderQuestion(question: Question): string {
  const options = question.options
    .map(
      (option) =>
        `<li><button data-action="answer" data-question="${attr(question.question_id)}" ` +
        `data-answer="${attr(option)}">${escapeHtml(option)}</button></li>`,
    )
    .join('');
  return (
    `<div class="question" data-question="${attr(question.question_id)}">` +
    `<p>${escapeHtml(question.text)}</p><ol>${options}</ol>` +
    `<button data-action="answer" data-question="${attr(question.question_id)}" data-answer="keep">keep current</button>` +
    '</div>'
  );
}

export function renderDiagnostics(view: SessionView): string {
  if (view.diagnostics.length === 0) return '';
  const items = view.diagnostics
    .map(
      (d) =>
        `<li class="diag ${d.severity}">${escapeHtml(d.severity)}` +
        `${d.entry !== null ? ` (entry ${d.entry})` : ''}: ${escapeHtml(d.message)}</li>`,
    )
    .join('');
  return `<section class="diagnostics"><h2>Validation</h2><ul>${items}</ul></section>`;
}

export function renderArtifacts(view: SessionView): string {
  if (view.artifacts.length === 0) return '';
  const items = view.artifacts
    .map(
      (name) =>
        `<li><a data-artifact="${attr(name)}" href="/sessions/${attr(view.sessionId ?? '')}/artifacts/${attr(name)}" download>${escapeHtml(name)}</a></li>`,
    )
    .join('');
  return `<section class="artifacts"><h2>Artifacts</h2><ul>${items}</ul></section>`;
}

export function renderActions(view: SessionView): string {
  const can = (phases: string[]) => (phases.includes(view.phase) && !view.busy ? '' : ' disabled');
  return (
    '<section class="actions">' +
    `<button data-action="match-schema"${can(['tables_loaded', 'schema_matched'])}>Match schema</button>` +
    `<button data-action="match-values"${can(['schema_matched', 'values_matched'])}>Match values</button>` +
    `<button data-action="build-spec"${can(['schema_matched', 'values_matched', 'spec_built'])}>Build spec</button>` +
    `<button data-action="materialize"${can(['spec_built', 'materialized'])}>Materialize</button>` +
    '</section>'
  );
}

export function renderApp(view: SessionView, lowScoreThreshold: number): string {
  const header = view.sessionId
    ? `<header><h1>harmonkit review</h1><code>${escapeHtml(view.sessionId)}</code></header>`
    : '<header><h1>harmonkit review</h1><p>Create a session to begin.</p></header>';
  return (
    header +
    renderBanner(view) +
    renderPhase(view) +
    renderActions(view) +
    renderMatches(view, lowScoreThreshold) +
    renderValueTables(view) +
    renderQuestions(view) +
    renderDiagnostics(view) +
    renderArtifacts(view)
  );
}
