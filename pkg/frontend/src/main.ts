/** Browser bootstrap: wire the editor textarea, config controls, and panel. */

import { ApiClient } from "./client.js";
import { PanelRenderer } from "./panel.js";
import { PanelSession } from "./session.js";

const SETTINGS_KEY = "counterscope-panel-settings";

interface Settings {
  serverUrl: string;
  architecture: string;
  compilerFlags: string;
}

function loadSettings(): Settings {
  try {
    const raw = localStorage.getItem(SETTINGS_KEY);
    if (raw) return { ...defaults(), ...JSON.parse(raw) };
  } catch {
    // fall through to defaults
  }
  return defaults();
}

function defaults(): Settings {
  return {
    serverUrl: "http://127.0.0.1:8787",
    architecture: "gfx90a",
    compilerFlags: "--std=c++17 -O3",
  };
}

function saveSettings(settings: Settings): void {
  localStorage.setItem(SETTINGS_KEY, JSON.stringify(settings));
}

export async function bootstrap(): Promise<void> {
  const el = (id: string) => document.getElementById(id)!;
  const editor = el("editor") as HTMLTextAreaElement;
  const archSelect = el("architecture") as HTMLSelectElement;
  const flagsInput = el("flags") as HTMLInputElement;
  const settings = loadSettings();
  flagsInput.value = settings.compilerFlags;

  const client = new ApiClient(settings.serverUrl);
  const renderer = new PanelRenderer(el("status"), el("counters"), el("plot"));
  const session = new PanelSession({
    transport: client,
    architecture: settings.architecture,
    compilerFlags: settings.compilerFlags,
    onRender: (vm) => renderer.render(vm),
  });
  renderer.render(session.viewModel);

  try {
    const info = await client.backends();
    const archs = [...new Set(info.backends.flatMap((b) => b.architectures))];
    const peaks = Object.assign({}, ...info.backends.map((b) => b.peaks ?? {}));
    session.setCapabilities(archs, peaks);
    archSelect.innerHTML = archs
      .map((a) => `<option ${a === settings.architecture ? "selected" : ""}>${a}</option>`)
      .join("");
  } catch (err) {
    el("status").textContent = `⚠ cannot reach server at ${settings.serverUrl}: ${err}`;
  }

  editor.addEventListener("input", () => session.onEdit(editor.value));
  const reconfigure = () => {
    if (session.configure(archSelect.value, flagsInput.value)) {
      settings.architecture = archSelect.value;
      settings.compilerFlags = flagsInput.value;
      saveSettings(settings);
    }
  };
  archSelect.addEventListener("change", reconfigure);
  flagsInput.addEventListener("change", reconfigure);
}

if (typeof document !== "undefined" && document.getElementById("editor")) {
  void bootstrap();
}
