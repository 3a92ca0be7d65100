/** A fetch stand-in that replays queued responses and records requests. */

export interface Captured {
  url: string;
  init: RequestInit | undefined;
}

export function stubFetch(queue: (Response | Error)[]): {
  fetchImpl: (url: string, init?: RequestInit) => Promise<Response>;
  calls: Captured[];
} {
  const calls: Captured[] = [];
  return {
    calls,
    fetchImpl: async (url, init) => {
      calls.push({ url, init });
      const next = queue.shift();
      if (next === undefined) {
        throw new Error("stub exhausted");
      }
      if (next instanceof Error) {
        throw next;
      }
      return next;
    },
  };
}

export function json(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}
