import { describe, expect, it, vi } from 'vitest';

import { ApiClient, ApiError } from '../src/api.js';
import { SessionController } from '../src/state.js';

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'Content-Type': 'application/json' },
  });
}

describe('ApiClient', () => {
  it('posts decisions to the decisions endpoint', async () => {
    const calls: Array<{ url: string; init?: RequestInit }> = [];
    const client = new ApiClient('', async (url, init) => {
      calls.push({ url, init });
      return jsonResponse(200, { applied: {} });
    });
    await client.decide('s-1', { kind: 'column', column: 'Histologic_type' }, 'replace', 'primary_diagnosis');
    expect(calls).toHaveLength(1);
    expect(calls[0]!.url).toBe('/sessions/s-1/decisions');
    const body = JSON.parse(String(calls[0]!.init?.body));
    expect(body.verdict).toBe('replace');
    expect(body.target).toBe('primary_diagnosis');
  });

  it('maps 409 bodies to ApiError with code', async () => {
    const client = new ApiClient('', async () =>
      jsonResponse(409, { error: 'conflict', detail: 'wrong phase' }),
    );
    await expect(client.matchSchema('s-1')).rejects.toMatchObject({
      status: 409,
      code: 'conflict',
    });
  });

  it('maps network failure to status 0 without retrying', async () => {
    const fetchImpl = vi.fn(async () => {
      throw new TypeError('fetch failed');
    });
    const client = new ApiClient('', fetchImpl);
    await expect(client.session('s-1')).rejects.toMatchObject({ status: 0 });
    expect(fetchImpl).toHaveBeenCalledTimes(1);
  });

  it('encodes column names in alternative urls', async () => {
    const urls: string[] = [];
    const client = new ApiClient('', async (url) => {
      urls.push(url);
      return jsonResponse(200, { alternatives: [] });
    });
    await client.alternatives('s-1', 'Tumor Size/cm', 5);
    expect(urls[0]).toBe('/sessions/s-1/matches/Tumor%20Size%2Fcm/alternatives?k=5');
  });
});

describe('SessionController', () => {
  it('never mutates locally: a failed mutation leaves the server view intact', async () => {
    let decides = 0;
    const client = new ApiClient('', async (url, init) => {
      if (url.endsWith('/decisions')) {
        decides += 1;
        return jsonResponse(409, { error: 'conflict', detail: 'nope' });
      }
      if (url.includes('/matches')) return jsonResponse(200, { matches: [], value_tables: [] });
      if (url.includes('/questions')) return jsonResponse(200, { questions: [] });
      return jsonResponse(200, {
        session_id: 's-1', phase: 'schema_matched', tables: ['t'],
        pending_questions: 0, artifacts: [],
      });
    });
    const controller = new SessionController(client);
    controller.view = { ...controller.view, sessionId: 's-1' };
    await controller.replace({ kind: 'column', column: 'x' }, 'y');
    expect(decides).toBe(1); // exactly one mutation, no silent retry
    expect(controller.view.banner).toContain('Out of step');
    expect(controller.view.phase).toBe('schema_matched'); // re-fetched from server
  });

  it('unreachable server raises a banner and sends nothing else', async () => {
    const fetchImpl = vi.fn(async (url: string) => {
      throw new TypeError('connection refused');
    });
    const controller = new SessionController(new ApiClient('', fetchImpl));
    controller.view = { ...controller.view, sessionId: 's-1' };
    await controller.matchSchema();
    expect(controller.view.banner).toContain('unreachable');
    expect(fetchImpl).toHaveBeenCalledTimes(1); // the one mutation, no retries
  });

  it('blocks materialization while error diagnostics exist', async () => {
    const fetchImpl = vi.fn(async () => jsonResponse(200, {}));
    const controller = new SessionController(new ApiClient('', fetchImpl));
    controller.view = {
      ...controller.view,
      sessionId: 's-1',
      diagnostics: [{ severity: 'error', entry: 0, message: 'G9 is not permissible' }],
    };
    await controller.materialize();
    expect(fetchImpl).not.toHaveBeenCalled();
    expect(controller.view.banner).toContain('blocked');
  });
});
