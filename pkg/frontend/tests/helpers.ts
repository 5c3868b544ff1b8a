// Shared fetch stubbing for the view tests. Responses come from fixture
// files captured against a live server, so shapes match the real API.

import { vi } from "vitest";

export interface StubCall {
  path: string;
  init?: RequestInit;
}

export interface FetchStub {
  calls: StubCall[];
  route: (
    pattern: string | RegExp,
    body: unknown,
    opts?: { status?: number; method?: string },
  ) => void;
  restore: () => void;
}

type Route = {
  pattern: string | RegExp;
  body: unknown;
  status: number;
  method: string;
};

function matches(route: Route, path: string, method: string): boolean {
  if (route.method !== method) return false;
  if (typeof route.pattern === "string") return path.startsWith(route.pattern);
  return route.pattern.test(path);
}

export function stubFetch(): FetchStub {
  const calls: StubCall[] = [];
  const routes: Route[] = [];

  const impl = vi.fn(async (input: RequestInfo | URL, init?: RequestInit) => {
    const path = String(input);
    const method = init?.method ?? "GET";
    calls.push({ path, init });
    const route = routes.find((r) => matches(r, path, method));
    if (!route) {
      return new Response(JSON.stringify({ detail: `no stub for ${path}` }), {
        status: 404,
        headers: { "Content-Type": "application/json" },
      });
    }
    return new Response(JSON.stringify(route.body), {
      status: route.status,
      headers: { "Content-Type": "application/json" },
    });
  });
  vi.stubGlobal("fetch", impl);

  return {
    calls,
    route(pattern, body, opts = {}) {
      routes.unshift({
        pattern,
        body,
        status: opts.status ?? 200,
        method: opts.method ?? "GET",
      });
    },
    restore() {
      vi.unstubAllGlobals();
    },
  };
}

/** Wait until queued microtasks and pending promise chains settle. */
export async function flush(times = 6): Promise<void> {
  for (let i = 0; i < times; i += 1) {
    await Promise.resolve();
  }
  await new Promise((resolve) => setTimeout(resolve, 0));
}
