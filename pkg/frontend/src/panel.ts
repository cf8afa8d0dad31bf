/** DOM rendering of the view model: status line, counters table, SVG roofline. */

import type { PanelViewModel } from "./viewmodel.js";

const PLOT_W = 520;
const PLOT_H = 340;
const MARGIN = 44;
const LEVEL_COLORS: Record<string, string> = {
  L1: "#e4572e",
  L2: "#17bebb",
  HBM: "#76b041",
};

function logScale(value: number, lo: number, hi: number, pixels: number): number {
  const clamped = Math.max(value, lo);
  return ((Math.log10(clamped) - Math.log10(lo)) / (Math.log10(hi) - Math.log10(lo))) * pixels;
}

export class PanelRenderer {
  constructor(
    private readonly statusEl: HTMLElement,
    private readonly tableEl: HTMLElement,
    private readonly plotEl: HTMLElement,
  ) {}

  render(vm: PanelViewModel): void {
    this.renderStatus(vm);
    this.renderTable(vm);
    this.renderPlot(vm);
  }

  private renderStatus(vm: PanelViewModel): void {
    const bits: string[] = [];
    if (vm.status.kind === "error") {
      bits.push(`⚠ ${vm.status.message}`);
    } else {
      bits.push(vm.status.kind === "inflight" ? "predicting…" : "idle");
    }
    if (vm.backend) bits.push(`backend ${vm.backend}`);
    if (vm.latencyMs != null) bits.push(`${vm.latencyMs.toFixed(1)} ms`);
    bits.push(...vm.warnings.map((w) => `⚠ ${w}`));
    this.statusEl.textContent = bits.join(" · ");
    this.statusEl.dataset.state = vm.status.kind;
  }

  private renderTable(vm: PanelViewModel): void {
    const rows = vm.table
      .map(
        (row) =>
          `<tr><td>${row.metric}</td><td>${row.physical}</td>` +
          `<td>${row.normalized}</td></tr>`,
      )
      .join("");
    this.tableEl.innerHTML =
      "<table><thead><tr><th>Metric</th><th>Physical</th><th>Normalized</th>" +
      `</tr></thead><tbody>${rows}</tbody></table>`;
  }

  private renderPlot(vm: PanelViewModel): void {
    const aiLo = 2 ** -8;
    const aiHi = 2 ** 12;
    const gfLo = 2 ** -2;
    const gfHi = 2 ** 14;
    const x = (ai: number) => MARGIN + logScale(ai, aiLo, aiHi, PLOT_W - 2 * MARGIN);
    const y = (gf: number) =>
      PLOT_H - MARGIN - logScale(gf, gfLo, gfHi, PLOT_H - 2 * MARGIN);

    const parts: string[] = [
      `<svg viewBox="0 0 ${PLOT_W} ${PLOT_H}" xmlns="http://www.w3.org/2000/svg">`,
      `<rect width="${PLOT_W}" height="${PLOT_H}" fill="#10141a"/>`,
    ];
    for (const ceiling of vm.ceilings) {
      const path = ceiling.samples
        .map(([ai, gf], i) => `${i ? "L" : "M"}${x(ai).toFixed(1)},${y(gf).toFixed(1)}`)
        .join(" ");
      parts.push(
        `<path d="${path}" fill="none" stroke="${LEVEL_COLORS[ceiling.level]}"` +
        ' stroke-width="1" stroke-dasharray="5 3" opacity="0.7"/>',
      );
    }
    for (const point of vm.rooflinePoints) {
      parts.push(
        `<circle cx="${x(point.ai).toFixed(1)}" cy="${y(point.gflops).toFixed(1)}"` +
        ` r="5" fill="${LEVEL_COLORS[point.level]}">` +
        `<title>${point.level}: AI ${point.ai}, ${point.gflops} GFLOP/s</title></circle>`,
      );
    }
    parts.push(
      `<text x="${PLOT_W / 2}" y="${PLOT_H - 8}" fill="#9aa7b5" font-size="11"` +
      ' text-anchor="middle">Arithmetic intensity (FLOPs/Byte, log)</text>',
      `<text x="12" y="${PLOT_H / 2}" fill="#9aa7b5" font-size="11"` +
      ` text-anchor="middle" transform="rotate(-90 12 ${PLOT_H / 2})">GFLOP/s (log)</text>`,
      "</svg>",
    );
    this.plotEl.innerHTML = parts.join("");
  }
}
