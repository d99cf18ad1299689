import type { RequestStateName, SwapRequest } from "./types.js";

export const BOARD_COLUMNS: readonly RequestStateName[] = [
  "Submitted",
  "Claimed",
  "Escalated",
  "Resolved",
];

export interface BoardColumn {
  state: RequestStateName;
  requests: SwapRequest[];
}

export type BoardModel = BoardColumn[];

// One column per lifecycle state, cards ordered by (occurrence_date, id) so
// the nearest shift sits on top.
export function buildBoard(requests: SwapRequest[]): BoardModel {
  const byState = new Map<RequestStateName, SwapRequest[]>(
    BOARD_COLUMNS.map((s) => [s, []]),
  );
  for (const r of requests) {
    byState.get(r.state)?.push(r);
  }
  return BOARD_COLUMNS.map((state) => ({
    state,
    requests: byState
      .get(state)!
      .slice()
      .sort(
        (a, b) =>
          a.occurrence_date.localeCompare(b.occurrence_date) ||
          a.id.localeCompare(b.id),
      ),
  }));
}

export function findRequest(model: BoardModel, id: string): SwapRequest | undefined {
  for (const col of model) {
    const hit = col.requests.find((r) => r.id === id);
    if (hit) return hit;
  }
  return undefined;
}
