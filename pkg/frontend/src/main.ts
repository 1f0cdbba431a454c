/** Browser entry point: wires the console to the DOM. */

import { ConsoleConnection } from "./connection.js";
import { MixerConsole } from "./console.js";
import { renderConsole, StripView } from "./view.js";
import { CombineMode } from "./protocol.js";

const MODES: CombineMode[] = ["F0", "F1", "F3"];

function stripHtml(strip: StripView): string {
  const meterPct = (value: number) =>
    Math.min(100, Math.round(value * 100)).toFixed(0);
  return `
    <div class="strip" data-channel="${strip.channel}">
      <h2>${strip.channel}</h2>
      <div class="meter ${strip.meter.frozen ? "frozen" : ""}">
        <div class="bar pre" style="height: ${meterPct(strip.meter.pre)}%"></div>
        <div class="bar post" style="height: ${meterPct(strip.meter.post)}%"></div>
      </div>
      <input type="range" class="fader" min="${strip.fader.min}"
             max="${strip.fader.max}" step="0.1" value="${strip.fader.db}"
             ${strip.enabled ? "" : "disabled"}>
      <span class="readout">${strip.fader.db.toFixed(1)} dB${strip.fader.clamped ? " (clamped)" : ""}</span>
      <div class="modes">
        ${MODES.map(
          (m) =>
            `<button class="mode ${m === strip.mode ? "active" : ""}"
                     data-mode="${m}" ${strip.enabled ? "" : "disabled"}>${m}</button>`,
        ).join("")}
      </div>
      <span class="filter">${strip.filterLabel}</span>
    </div>`;
}

export function mount(root: HTMLElement): MixerConsole {
  const proto = location.protocol === "https:" ? "wss" : "ws";
  const connection = new ConsoleConnection({
    controlUrl: `${proto}://${location.host}/control`,
    statusUrl: `${location.origin}/status`,
  });
  const console_ = new MixerConsole(connection);

  console_.onChange = (state) => {
    const view = renderConsole(state);
    root.innerHTML = `
      ${view.banner ? `<div class="banner">${view.banner}</div>` : ""}
      <div class="strips">${view.strips.map(stripHtml).join("")}</div>
      <button class="record" ${view.recordButton.enabled ? "" : "disabled"}>
        ${view.recordButton.label}
      </button>
      ${view.lastError ? `<div class="error">${view.lastError}</div>` : ""}`;

    for (const stripEl of root.querySelectorAll<HTMLElement>(".strip")) {
      const channel = stripEl.dataset.channel!;
      stripEl
        .querySelector<HTMLInputElement>(".fader")!
        .addEventListener("input", (ev) => {
          console_.moveFader(channel, Number((ev.target as HTMLInputElement).value));
        });
      for (const btn of stripEl.querySelectorAll<HTMLButtonElement>(".mode")) {
        btn.addEventListener("click", () =>
          console_.setMode(channel, btn.dataset.mode as CombineMode),
        );
      }
    }
    root.querySelector<HTMLButtonElement>(".record")!.addEventListener(
      "click",
      () => {
        if (state.recording) {
          console_.stopRecord();
        } else {
          console_.startRecord(`session-${Date.now()}`);
        }
      },
    );
  };

  console_.start();
  return console_;
}
