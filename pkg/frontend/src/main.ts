// Browser bootstrap: mounts the controller, renders on change, and wires
// data-action buttons through event delegation. All state lives on the
// server; every click maps to at most one mutation.

import { ApiClient } from './api.js';
import { renderApp } from './render.js';
import { SessionController } from './state.js';

const api = new ApiClient('');
const controller = new SessionController(api);

const root = document.getElementById('app');
if (!root) {
  throw new Error('missing #app mount point');
}

controller.onChange = (view) => {
  root.innerHTML = renderApp(view, controller.lowScoreThreshold);
};

root.addEventListener('click', (event) => {
  const button = (event.target as HTMLElement).closest('button[data-action]');
  if (!(button instanceof HTMLButtonElement) || button.disabled) return;
  const action = button.dataset.action;
  void dispatch(action ?? '', button.dataset);
});

async function dispatch(action: string, data: DOMStringMap): Promise<void> {
  switch (action) {
    case 'alternatives':
      if (data.column) await controller.fetchAlternatives(data.column);
      break;
    case 'replace-column':
      if (data.column && data.target) {
        await controller.replace({ kind: 'column', column: data.column }, data.target);
      }
      break;
    case 'answer':
      if (data.question && data.answer) {
        await controller.answer(data.question, data.answer);
      }
      break;
    case 'match-schema':
      await controller.matchSchema();
      break;
    case 'match-values': {
      const columns = controller.view.matches
        .filter((m) => m.target !== null)
        .map((m) => m.source);
      await controller.matchValues(columns);
      break;
    }
    case 'build-spec':
      await controller.buildSpec();
      break;
    case 'materialize':
      await controller.materialize();
      break;
    default:
      break;
  }
}

const uploadForm = document.getElementById('upload-form');
if (uploadForm instanceof HTMLFormElement) {
  uploadForm.addEventListener('submit', (event) => {
    event.preventDefault();
    const fileInput = uploadForm.querySelector<HTMLInputElement>('input[type=file]');
    const nameInput = uploadForm.querySelector<HTMLInputElement>('input[name=table-name]');
    const file = fileInput?.files?.[0];
    if (!file) return;
    void file.text().then((text) => {
      const name = nameInput?.value || file.name.replace(/\.csv$/i, '');
      return controller.uploadCsv(name, text);
    });
  });
}

const vocabForm = document.getElementById('session-form');
if (vocabForm instanceof HTMLFormElement) {
  vocabForm.addEventListener('submit', (event) => {
    event.preventDefault();
    const pathInput = vocabForm.querySelector<HTMLInputElement>('input[name=vocab-path]');
    const fileInput = vocabForm.querySelector<HTMLInputElement>('input[type=file]');
    const file = fileInput?.files?.[0];
    if (file) {
      void file.text().then((text) => controller.createSession(JSON.parse(text)));
    } else if (pathInput?.value) {
      void controller.createSessionFromPath(pathInput.value);
    }
  });
}

void controller.loadConfig().then(() => controller.refresh());
