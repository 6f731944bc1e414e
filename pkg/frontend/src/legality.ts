// Command buttons enable exactly where the vehicle lifecycle accepts them.

import type { CommandKind } from "./protocol.js";

const LEGAL_STATE: Record<CommandKind, string> = {
  DROPOFF: "ARRIVING",
  PARK: "AWAITING_PARK",
  RETRIEVE: "PARKED",
};

export function commandEnabled(state: string, kind: CommandKind): boolean {
  return LEGAL_STATE[kind] === state;
}

export interface ButtonRow {
  ns: string;
  state: string;
  dropoff: boolean;
  park: boolean;
  retrieve: boolean;
}

export function buttonRows(states: Record<string, { state: string }>): ButtonRow[] {
  return Object.keys(states)
    .sort()
    .map((ns) => ({
      ns,
      state: states[ns].state,
      dropoff: commandEnabled(states[ns].state, "DROPOFF"),
      park: commandEnabled(states[ns].state, "PARK"),
      retrieve: commandEnabled(states[ns].state, "RETRIEVE"),
    }));
}
