/** Panel session: debounced edits, monotone request ids, stale suppression.
 *
 * All races resolve through one rule: a response renders only if its
 * request_id equals the highest id issued so far. Superseded requests are
 * simply ignored when they land. The session is a pure state machine over an
 * injected transport, so tests can script arbitrary delivery orders.
 */

import { Debouncer, type TimerHost } from "./debounce.js";
import { buildViewModel, type PanelStatus, type PanelViewModel } from "./viewmodel.js";
import {
  ServerError,
  type MachinePeaksWire,
  type PredictRequestBody,
  type PredictResponseBody,
} from "./types.js";

export interface Transport {
  predict(body: PredictRequestBody): Promise<PredictResponseBody>;
}

export interface SessionOptions {
  transport: Transport;
  architecture: string;
  compilerFlags?: string;
  backend?: string;
  debounceMs?: number;
  timers?: TimerHost;
  /** Known-good architectures (from /v1/backends); empty = accept any. */
  capabilities?: string[];
  peaks?: Record<string, MachinePeaksWire>;
  onRender?: (vm: PanelViewModel) => void;
}

export const DEFAULT_DEBOUNCE_MS = 300;

/** Unbalanced single/double quotes make a flags string locally invalid. */
export function validateFlags(flags: string): string | null {
  let single = false;
  let double = false;
  for (const ch of flags) {
    if (ch === "'" && !double) single = !single;
    else if (ch === '"' && !single) double = !double;
  }
  if (single || double) {
    return "compiler flags have unbalanced quotes";
  }
  return null;
}

export class PanelSession {
  private readonly transport: Transport;
  private readonly debouncer: Debouncer;
  private readonly onRender: (vm: PanelViewModel) => void;
  private capabilities: string[];
  private peaksByArch: Record<string, MachinePeaksWire>;

  private architecture: string;
  private compilerFlags: string;
  private backend: string | undefined;
  private buffer = "";
  private lastIssuedId = 0;
  private lastRendered: PredictResponseBody | null = null;
  private status: PanelStatus = { kind: "idle" };
  private configError: string | null = null;

  constructor(options: SessionOptions) {
    this.transport = options.transport;
    this.architecture = options.architecture;
    this.compilerFlags = options.compilerFlags ?? "";
    this.backend = options.backend;
    this.capabilities = options.capabilities ?? [];
    this.peaksByArch = options.peaks ?? {};
    this.onRender = options.onRender ?? (() => {});
    this.debouncer = new Debouncer(
      options.debounceMs ?? DEFAULT_DEBOUNCE_MS,
      options.timers ?? globalThis,
    );
  }

  get lastIssuedRequestId(): number {
    return this.lastIssuedId;
  }

  get renderedResponse(): PredictResponseBody | null {
    return this.lastRendered;
  }

  get viewModel(): PanelViewModel {
    const peaks = this.peaksByArch[this.architecture] ?? null;
    const vm = buildViewModel(this.lastRendered, this.status, peaks);
    if (this.configError) {
      vm.warnings = [...vm.warnings, this.configError];
    }
    return vm;
  }

  setCapabilities(architectures: string[], peaks?: Record<string, MachinePeaksWire>): void {
    this.capabilities = [...architectures];
    if (peaks) this.peaksByArch = peaks;
  }

  /** Buffer changed: debounce, then issue one request for the quiet period. */
  onEdit(text: string): void {
    this.buffer = text;
    if (!text.trim()) {
      this.debouncer.cancel();
      this.status = { kind: "idle" };
      this.emit();
      return;
    }
    this.debouncer.schedule(() => this.issueRequest());
  }

  /** Configuration change; re-predicts the current buffer immediately. */
  configure(architecture: string, compilerFlags: string): boolean {
    if (this.capabilities.length && !this.capabilities.includes(architecture)) {
      this.configError = `architecture ${architecture} is not supported by the server`;
      this.emit();
      return false;
    }
    const flagsProblem = validateFlags(compilerFlags);
    if (flagsProblem) {
      this.configError = flagsProblem;
      this.emit();
      return false;
    }
    this.configError = null;
    this.architecture = architecture;
    this.compilerFlags = compilerFlags;
    if (this.buffer.trim()) {
      this.debouncer.cancel();
      this.issueRequest();
    }
    return true;
  }

  private issueRequest(): void {
    const id = ++this.lastIssuedId;
    this.status = { kind: "inflight" };
    this.emit();
    const body: PredictRequestBody = {
      source: this.buffer,
      architecture: this.architecture,
      compiler_flags: this.compilerFlags,
      request_id: id,
    };
    if (this.backend) body.backend = this.backend;
    this.transport.predict(body).then(
      (resp) => this.onResponse(resp),
      (err) => this.onFailure(id, err),
    );
  }

  /** Renders only the newest response; anything older is discarded. */
  onResponse(resp: PredictResponseBody): void {
    if (resp.request_id !== this.lastIssuedId) {
      return; // stale: a newer request was issued after this one
    }
    if (!resp.normalized || !Array.isArray(resp.roofline)) {
      this.status = {
        kind: "error",
        message: "malformed prediction payload; keeping previous counters",
      };
      this.emit();
      return;
    }
    this.lastRendered = resp;
    this.status = { kind: "idle" };
    this.emit();
  }

  private onFailure(id: number, err: unknown): void {
    if (id !== this.lastIssuedId) {
      return; // a newer request owns the panel now
    }
    const message =
      err instanceof ServerError
        ? err.kind === "no_block" || err.status === 422
          ? `backend returned malformed counters (${err.kind})`
          : `${err.kind}: ${err.message}`
        : String(err);
    this.status = { kind: "error", message };
    this.emit();
  }

  private emit(): void {
    this.onRender(this.viewModel);
  }
}
