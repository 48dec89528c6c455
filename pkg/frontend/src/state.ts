// View model and reducer: one serialized stream of server events and user
// actions. The UI owns no authoritative state; every view is reproducible
// from (session, version) through the service alone.

import type { Diagnostic, Edit, EditResult, ServiceClient, Snapshot } from "./protocol.js";
import { StaleVersionError } from "./protocol.js";

export type ViewMode = "topdown" | "wireframe3d";

export interface ViewModel {
  sessionId: string | null;
  version: number;
  snapshot: Snapshot | null;
  diagnostics: Diagnostic[];
  selectedAssetId: string | null;
  mode: ViewMode;
  /** action that could not be sent (network failure); state untouched */
  unsent: Edit | null;
  busy: boolean;
}

export const initialViewModel: ViewModel = {
  sessionId: null,
  version: 0,
  snapshot: null,
  diagnostics: [],
  selectedAssetId: null,
  mode: "topdown",
  unsent: null,
  busy: false,
};

export type Action =
  | { type: "session_opened"; sessionId: string; version: number }
  | { type: "snapshot_loaded"; snapshot: Snapshot }
  | { type: "edit_accepted"; result: EditResult }
  | { type: "edit_unsent"; edit: Edit }
  | { type: "server_event"; version: number }
  | { type: "select_asset"; assetId: string | null }
  | { type: "set_mode"; mode: ViewMode }
  | { type: "busy"; busy: boolean };

export function reduce(vm: ViewModel, action: Action): ViewModel {
  switch (action.type) {
    case "session_opened":
      return { ...initialViewModel, sessionId: action.sessionId, version: action.version };
    case "snapshot_loaded":
      return { ...vm, snapshot: action.snapshot, unsent: null };
    case "edit_accepted":
      return {
        ...vm,
        version: action.result.version,
        diagnostics: action.result.diagnostics,
        unsent: null,
      };
    case "edit_unsent":
      return { ...vm, unsent: action.edit };
    case "server_event":
      // stale events (from our own edit already applied) are harmless
      return action.version > vm.version ? { ...vm, version: action.version } : vm;
    case "select_asset":
      return { ...vm, selectedAssetId: action.assetId };
    case "set_mode":
      return { ...vm, mode: action.mode };
    case "busy":
      return { ...vm, busy: action.busy };
  }
}

export type UserCommand =
  | { kind: "servo"; op: string }
  | { kind: "move_asset"; assetId: string; location: { x: number; y: number; z: number } }
  | { kind: "rotate_asset"; assetId: string; rotation: { x: number; y: number; z: number } }
  | { kind: "undo" };

export function commandToEdit(command: UserCommand): Edit {
  switch (command.kind) {
    case "servo":
      return { kind: "servo_command", payload: { op: command.op } };
    case "move_asset":
      return {
        kind: "set_placement",
        payload: { asset_id: command.assetId, location: command.location },
      };
    case "rotate_asset":
      return {
        kind: "set_placement",
        payload: { asset_id: command.assetId, rotation: command.rotation },
      };
    case "undo":
      return { kind: "undo", payload: {} };
  }
}

export interface Dispatcher {
  viewModel: ViewModel;
  dispatch(command: UserCommand): Promise<void>;
  applyServerEvent(event: { version: number }): Promise<void>;
}

/**
 * Serialize user actions into at most one edit POST each. A stale-version
 * rejection refetches the current version and retries exactly once; a network
 * failure marks the action unsent and leaves the view untouched.
 */
export function createDispatcher(
  client: Pick<ServiceClient, "postEdit" | "fetchSnapshot" | "fetchSummary">,
  onChange: (vm: ViewModel) => void = () => {},
): Dispatcher {
  let vm = initialViewModel;

  const update = (action: Action) => {
    vm = reduce(vm, action);
    onChange(vm);
  };

  const refreshSnapshot = async () => {
    if (!vm.sessionId) return;
    const snapshot = await client.fetchSnapshot(vm.sessionId);
    update({ type: "snapshot_loaded", snapshot });
  };

  return {
    get viewModel() {
      return vm;
    },
    set viewModel(next: ViewModel) {
      vm = next;
    },
    async dispatch(command: UserCommand): Promise<void> {
      if (!vm.sessionId || vm.busy) return;
      const edit = commandToEdit(command);
      update({ type: "busy", busy: true });
      try {
        let result;
        try {
          result = await client.postEdit(vm.sessionId, edit, vm.version);
        } catch (error) {
          if (!(error instanceof StaleVersionError)) throw error;
          const summary = await client.fetchSummary(vm.sessionId);
          update({ type: "server_event", version: summary.version });
          result = await client.postEdit(vm.sessionId, edit, summary.version);
        }
        update({ type: "edit_accepted", result });
        await refreshSnapshot();
      } catch (error) {
        if (error instanceof StaleVersionError) throw error;
        update({ type: "edit_unsent", edit });
      } finally {
        update({ type: "busy", busy: false });
      }
    },
    async applyServerEvent(event: { version: number }): Promise<void> {
      if (event.version > vm.version) {
        update({ type: "server_event", version: event.version });
        await refreshSnapshot();
      }
    },
  };
}

// exposed for wiring in main.ts and for tests
export function bindViewModel(dispatcher: Dispatcher, vm: ViewModel): void {
  (dispatcher as { viewModel: ViewModel }).viewModel = vm;
}
