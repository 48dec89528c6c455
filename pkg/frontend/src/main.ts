// Studio entry point: open a session, wire the servo buttons, canvas drags,
// numeric placement inputs, undo, and the diagnostics badges.

import { canvasToWorld, hitTest, paintTopdown, paintWireframe, placementById } from "./render.js";
import { ServiceClient } from "./protocol.js";
import { createDispatcher, type ViewModel } from "./state.js";

const SERVO_OPS = [
  "pan_left", "pan_right", "pan_up", "pan_down",
  "orbit_left", "orbit_right", "orbit_up", "orbit_down",
  "zoom_in", "zoom_out", "roll_left", "roll_right",
];

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const base = params.get("service") ?? "";
  const sceneId = Number(params.get("scene") ?? "1");
  const shotId = Number(params.get("shot") ?? "1");

  const client = new ServiceClient(base);
  const canvas = el<HTMLCanvasElement>("scene-view");
  const diagnosticsPanel = el<HTMLElement>("diagnostics");
  const statusLine = el<HTMLElement>("status");
  const inspector = el<HTMLElement>("inspector");

  const repaint = (vm: ViewModel) => {
    statusLine.textContent = vm.sessionId
      ? `session ${vm.sessionId} · v${vm.version}${vm.unsent ? " · last action unsent" : ""}`
      : "connecting";
    if (!vm.snapshot) return;
    if (vm.mode === "topdown") paintTopdown(canvas, vm.snapshot, vm.selectedAssetId);
    else paintWireframe(canvas, vm.snapshot, vm.selectedAssetId);

    diagnosticsPanel.replaceChildren(
      ...vm.diagnostics.map((d) => {
        const badge = document.createElement("span");
        badge.className = `badge badge-${d.kind}`;
        badge.textContent = `${d.kind}: ${d.asset_id}${d.anchor_id ? " ↔ " + d.anchor_id : ""}`;
        badge.title = d.detail;
        return badge;
      }),
    );

    const selected = vm.selectedAssetId && placementById(vm.snapshot, vm.selectedAssetId);
    if (selected) {
      inspector.replaceChildren();
      const title = document.createElement("strong");
      title.textContent = selected.asset_id;
      inspector.append(title);
      for (const axis of ["x", "y", "z"] as const) {
        const input = document.createElement("input");
        input.type = "number";
        input.step = "0.1";
        input.value = selected.location[axis].toFixed(3);
        input.addEventListener("change", () => {
          const location = { ...selected.location, [axis]: Number(input.value) };
          void dispatcher.dispatch({
            kind: "move_asset", assetId: selected.asset_id, location,
          });
        });
        inspector.append(input);
      }
      const spin = document.createElement("input");
      spin.type = "number";
      spin.step = "5";
      spin.value = String(selected.rotation.z);
      spin.title = "spin (degrees about Z)";
      spin.addEventListener("change", () => {
        void dispatcher.dispatch({
          kind: "rotate_asset",
          assetId: selected.asset_id,
          rotation: { ...selected.rotation, z: Number(spin.value) },
        });
      });
      inspector.append(spin);
    } else {
      inspector.textContent = "click an asset to edit it";
    }
  };

  const dispatcher = createDispatcher(client, repaint);

  const servoBar = el<HTMLElement>("servo-bar");
  for (const op of SERVO_OPS) {
    const button = document.createElement("button");
    button.textContent = op.replace("_", " ");
    button.addEventListener("click", () => void dispatcher.dispatch({ kind: "servo", op }));
    servoBar.append(button);
  }
  el<HTMLButtonElement>("undo").addEventListener("click", () => {
    void dispatcher.dispatch({ kind: "undo" });
  });
  el<HTMLButtonElement>("mode-toggle").addEventListener("click", () => {
    const vm = dispatcher.viewModel;
    const mode = vm.mode === "topdown" ? "wireframe3d" : "topdown";
    dispatcher.viewModel = { ...vm, mode };
    repaint(dispatcher.viewModel);
  });

  // drag to move, click to select; the snapshot never mutates locally
  let dragging: string | null = null;
  canvas.addEventListener("mousedown", (event) => {
    const vm = dispatcher.viewModel;
    if (!vm.snapshot || vm.mode !== "topdown") return;
    const rect = canvas.getBoundingClientRect();
    dragging = hitTest(vm.snapshot, event.clientX - rect.left, event.clientY - rect.top);
    dispatcher.viewModel = { ...vm, selectedAssetId: dragging };
    repaint(dispatcher.viewModel);
  });
  canvas.addEventListener("mouseup", (event) => {
    const vm = dispatcher.viewModel;
    if (!dragging || !vm.snapshot) return;
    const rect = canvas.getBoundingClientRect();
    const target = canvasToWorld(
      vm.snapshot, event.clientX - rect.left, event.clientY - rect.top,
    );
    const placement = placementById(vm.snapshot, dragging);
    if (placement) {
      void dispatcher.dispatch({
        kind: "move_asset",
        assetId: dragging,
        location: { x: target.x, y: target.y, z: placement.location.z },
      });
    }
    dragging = null;
  });

  const info = await client.openSession(sceneId, shotId);
  dispatcher.viewModel = {
    ...dispatcher.viewModel,
    sessionId: info.session_id,
    version: info.version,
  };
  const snapshot = await client.fetchSnapshot(info.session_id);
  dispatcher.viewModel = { ...dispatcher.viewModel, snapshot };
  repaint(dispatcher.viewModel);

  client.subscribeEvents(info.session_id, (event) => {
    void dispatcher.applyServerEvent(event);
  });
}

void boot();
