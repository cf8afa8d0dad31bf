import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { PanelSession, validateFlags } from "../src/session.js";
import { ServerError, type PredictRequestBody, type PredictResponseBody } from "../src/types.js";

function makeResponse(requestId: number, hbmAi = 0.125, hbmGflops = 204.8): PredictResponseBody {
  const normalized: Record<string, string> = {
    compiler_flags: "-O3",
    architecture: "gfx90a",
  };
  const physical: Record<string, { value: number; unit: string }> = {};
  for (const metric of [
    "L1_Cache_Arithmetic_Intensity", "L2_Cache_Arithmetic_Intensity",
    "HBM_Arithmetic_Intensity", "L1_Cache_GFLOPS", "L2_Cache_GFLOPS",
    "HBM_GFLOPS", "L1_Cache_Bandwidth", "L2_Cache_Bandwidth",
    "L2_Fabric_Write_BW", "L2_Fabric_Read_BW", "L1_Cache_Hit_Rate",
    "L2_Cache_Hit_Rate",
  ]) {
    normalized[metric] = "0.500";
    physical[metric] = { value: 50.0, unit: "GB/s" };
  }
  return {
    request_id: requestId,
    backend: "oracle",
    latency_ms: 1.5,
    normalized,
    physical,
    roofline: [
      { level: "L1", ai: 0.125, gflops: 204.8 },
      { level: "L2", ai: 0.125, gflops: 204.8 },
      { level: "HBM", ai: hbmAi, gflops: hbmGflops },
    ],
    warnings: [],
  };
}

/** Transport that records requests and lets the test resolve them manually. */
class ScriptedTransport {
  requests: PredictRequestBody[] = [];
  private resolvers: Array<{
    resolve: (r: PredictResponseBody) => void;
    reject: (e: unknown) => void;
  }> = [];

  predict(body: PredictRequestBody): Promise<PredictResponseBody> {
    this.requests.push(body);
    return new Promise((resolve, reject) => {
      this.resolvers.push({ resolve, reject });
    });
  }

  /** Deliver a response for the i-th issued request (any order). */
  deliver(index: number, response: PredictResponseBody): void {
    this.resolvers[index].resolve(response);
  }

  fail(index: number, error: unknown): void {
    this.resolvers[index].reject(error);
  }
}

describe("PanelSession", () => {
  let transport: ScriptedTransport;
  let session: PanelSession;
  let rendered: ReturnType<PanelSession["viewModel"]["status"]["kind"]>[];

  beforeEach(() => {
    vi.useFakeTimers();
    transport = new ScriptedTransport();
    session = new PanelSession({
      transport,
      architecture: "gfx90a",
      compilerFlags: "-O3",
      debounceMs: 300,
    });
  });

  afterEach(() => {
    vi.useRealTimers();
  });

  const flush = () => vi.runAllTicks();

  it("collapses rapid edits into one request", () => {
    session.onEdit("__global__ void a() {}");
    vi.advanceTimersByTime(50);
    session.onEdit("__global__ void ab() {}");
    vi.advanceTimersByTime(300);
    expect(transport.requests).toHaveLength(1);
    expect(transport.requests[0].source).toBe("__global__ void ab() {}");
    expect(transport.requests[0].request_id).toBe(1);
  });

  it("issues separate requests for edits beyond the debounce window", () => {
    session.onEdit("first");
    vi.advanceTimersByTime(400);
    session.onEdit("second");
    vi.advanceTimersByTime(400);
    expect(transport.requests.map((r) => r.request_id)).toEqual([1, 2]);
  });

  it("sends nothing for an empty buffer and stays idle", () => {
    session.onEdit("");
    vi.advanceTimersByTime(1000);
    expect(transport.requests).toHaveLength(0);
    expect(session.viewModel.status.kind).toBe("idle");
  });

  it("clearing the buffer cancels a pending debounce", () => {
    session.onEdit("something");
    vi.advanceTimersByTime(100);
    session.onEdit("   ");
    vi.advanceTimersByTime(1000);
    expect(transport.requests).toHaveLength(0);
  });

  it("renders in-order responses", async () => {
    session.onEdit("code");
    vi.advanceTimersByTime(300);
    transport.deliver(0, makeResponse(1));
    await flush();
    expect(session.renderedResponse?.request_id).toBe(1);
    expect(session.viewModel.status.kind).toBe("idle");
  });

  it("discards an out-of-order stale response", async () => {
    session.onEdit("v1");
    vi.advanceTimersByTime(300); // request 1 in flight
    session.onEdit("v2");
    vi.advanceTimersByTime(300); // request 2 in flight

    transport.deliver(1, makeResponse(2, 0.25, 409.6));
    await flush();
    expect(session.renderedResponse?.request_id).toBe(2);

    // request 1 lands late: must not overwrite request 2's render
    transport.deliver(0, makeResponse(1, 0.999, 1.0));
    await flush();
    expect(session.renderedResponse?.request_id).toBe(2);
    const hbm = session.viewModel.rooflinePoints.find((p) => p.level === "HBM")!;
    expect(hbm.ai).toBe(0.25);
    expect(hbm.gflops).toBe(409.6);
  });

  it("never renders an id lower than the latest issued, any delivery order", async () => {
    const edits = ["a", "b", "c", "d", "e"];
    for (const text of edits) {
      session.onEdit(text);
      vi.advanceTimersByTime(300);
    }
    expect(transport.requests).toHaveLength(5);
    // deliver in a scrambled order
    for (const index of [2, 0, 4, 1, 3]) {
      transport.deliver(index, makeResponse(index + 1));
      await flush();
      const renderedId = session.renderedResponse?.request_id ?? 0;
      expect(renderedId === 0 || renderedId === 5).toBe(true);
    }
    expect(session.renderedResponse?.request_id).toBe(5);
  });

  it("renders the HBM roofline point exactly as the server sent it", async () => {
    session.onEdit("kernel");
    vi.advanceTimersByTime(300);
    const resp = makeResponse(1, 0.015625, 25.6);
    transport.deliver(0, resp);
    await flush();
    const hbm = session.viewModel.rooflinePoints.find((p) => p.level === "HBM")!;
    expect(hbm.ai).toBe(resp.roofline[2].ai);
    expect(hbm.gflops).toBe(resp.roofline[2].gflops);
  });

  it("shows a banner and keeps the old plot on a 422 extraction failure", async () => {
    session.onEdit("good");
    vi.advanceTimersByTime(300);
    transport.deliver(0, makeResponse(1));
    await flush();

    session.onEdit("bad");
    vi.advanceTimersByTime(300);
    transport.fail(1, new ServerError(422, "no_block", "no JSON block"));
    await flush();

    const vm = session.viewModel;
    expect(vm.status.kind).toBe("error");
    expect((vm.status as { message: string }).message).toContain(
      "backend returned malformed counters",
    );
    // previous render retained
    expect(session.renderedResponse?.request_id).toBe(1);
    expect(vm.rooflinePoints).toHaveLength(3);
  });

  it("ignores a failure from a superseded request", async () => {
    session.onEdit("v1");
    vi.advanceTimersByTime(300);
    session.onEdit("v2");
    vi.advanceTimersByTime(300);
    transport.fail(0, new ServerError(503, "backend_unavailable", "down"));
    await flush();
    expect(session.viewModel.status.kind).toBe("inflight"); // request 2 still pending
    transport.deliver(1, makeResponse(2));
    await flush();
    expect(session.viewModel.status.kind).toBe("idle");
  });

  it("treats a structurally malformed payload as an error banner", async () => {
    session.onEdit("v1");
    vi.advanceTimersByTime(300);
    transport.deliver(0, { request_id: 1 } as PredictResponseBody);
    await flush();
    expect(session.viewModel.status.kind).toBe("error");
  });

  describe("configure", () => {
    it("applies new config to subsequent requests and re-predicts now", async () => {
      session.onEdit("code");
      vi.advanceTimersByTime(300);
      expect(transport.requests[0].architecture).toBe("gfx90a");

      expect(session.configure("gfx942", "-O2")).toBe(true);
      expect(transport.requests).toHaveLength(2); // immediate re-predict, no debounce
      expect(transport.requests[1].architecture).toBe("gfx942");
      expect(transport.requests[1].compiler_flags).toBe("-O2");
      expect(transport.requests[1].request_id).toBe(2);
    });

    it("rejects an unsupported architecture locally", () => {
      session.setCapabilities(["gfx90a"]);
      session.onEdit("code");
      vi.advanceTimersByTime(300);
      expect(session.configure("gfx1234", "-O2")).toBe(false);
      expect(transport.requests).toHaveLength(1);
      expect(session.viewModel.warnings.join(" ")).toContain("not supported");
    });

    it("rejects unbalanced quotes locally without a request", () => {
      session.onEdit("code");
      vi.advanceTimersByTime(300);
      expect(session.configure("gfx90a", '-DNAME="broken')).toBe(false);
      expect(transport.requests).toHaveLength(1);
    });

    it("does not issue a request when the buffer is empty", () => {
      expect(session.configure("gfx90a", "-O1")).toBe(true);
      expect(transport.requests).toHaveLength(0);
    });
  });
});

describe("validateFlags", () => {
  it("accepts balanced quoting", () => {
    expect(validateFlags('-O3 -DGREETING="hello world"')).toBeNull();
    expect(validateFlags("-DX='a b' -O2")).toBeNull();
    expect(validateFlags("")).toBeNull();
  });

  it("rejects unbalanced quotes", () => {
    expect(validateFlags('-DX="oops')).not.toBeNull();
    expect(validateFlags("-DX='oops")).not.toBeNull();
  });

  it("handles nesting of one quote kind inside the other", () => {
    expect(validateFlags(`-DX="it's fine"`)).toBeNull();
  });
});
