// DOM rendering for the virtual board. Thin bindings only: all behavior
// lives in ControlClient/BoardViewModel so the replay test covers it.

import { ControlClient } from "./client.js";
import { GPIO_COUNT, MAX_LEDS } from "./viewmodel.js";

function el<K extends keyof HTMLElementTagNameMap>(
    tag: K, className?: string, text?: string): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className !== undefined) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function mountBoard(root: HTMLElement, client: ControlClient): void {
  const banner = el("div", "banner");
  const status = el("span", "status", "disconnected");
  const version = el("span", "version");

  const header = el("header");
  header.append(el("h1", undefined, "croc virtual board"), status, version);

  // run controls
  const controls = el("div", "controls");
  for (const action of ["run", "pause", "step", "reset"] as const) {
    const button = el("button", undefined, action);
    button.onclick = () => client.runControl(action);
    controls.append(button);
  }
  const bpInput = el("input") as HTMLInputElement;
  bpInput.placeholder = "0x10000010";
  const bpButton = el("button", undefined, "break");
  bpButton.onclick = () => {
    if (bpInput.value) client.setBreakpoint(bpInput.value.trim());
  };
  const bpList = el("ul", "breakpoints");
  controls.append(bpInput, bpButton, bpList);

  const fileInput = el("input") as HTMLInputElement;
  fileInput.type = "file";
  fileInput.onchange = () => {
    const file = fileInput.files?.[0];
    if (file === undefined) return;
    void file.arrayBuffer().then((buf) => {
      let raw = "";
      for (const byte of new Uint8Array(buf)) {
        raw += String.fromCharCode(byte);
      }
      client.loadElf(btoa(raw));
    });
  };
  controls.append(fileInput);

  // register view
  const regPane = el("pre", "registers");

  // uart terminal
  const terminal = el("pre", "terminal");
  const termInput = el("input") as HTMLInputElement;
  termInput.placeholder = "type + enter to send";
  termInput.onkeydown = (keyEvent) => {
    if (keyEvent.key === "Enter") {
      client.terminalInput(termInput.value + "\n");
      termInput.value = "";
    }
  };

  // gpio widgets: switch (input pads) + lamp (output pads)
  const gpioPane = el("div", "gpio");
  const lamps: HTMLElement[] = [];
  const switches: HTMLInputElement[] = [];
  for (let pin = 0; pin < GPIO_COUNT; pin++) {
    const row = el("div", "gpio-row");
    const lamp = el("span", "lamp", "●");
    const sw = el("input") as HTMLInputElement;
    sw.type = "checkbox";
    sw.onchange = () => client.toggleGpio(pin);
    row.append(el("span", "pin-label", `gpio${pin}`), sw, lamp);
    gpioPane.append(row);
    lamps.push(lamp);
    switches.push(sw);
  }

  // neopixel strip
  const strip = el("div", "strip");
  const leds: HTMLElement[] = [];
  for (let i = 0; i < MAX_LEDS; i++) {
    const led = el("span", "led");
    strip.append(led);
    leds.push(led);
  }

  const statsPane = el("div", "stats");

  root.append(banner, header, controls, regPane, terminal, termInput,
              gpioPane, strip, statsPane);

  // coalesce renders: pin-event floods must not starve the page
  let renderScheduled = false;
  client.onchange = () => {
    if (renderScheduled) return;
    renderScheduled = true;
    requestAnimationFrame(() => {
      renderScheduled = false;
      render();
    });
  };

  function render(): void {
    const vm = client.vm;
    banner.textContent = vm.banner ?? vm.lastError ?? "";
    banner.style.display = banner.textContent ? "block" : "none";
    status.textContent = vm.running ? "running"
      : `${vm.connection}${vm.haltReason ? ` (${vm.haltReason})` : ""}`;
    version.textContent = vm.version ?? "";
    regPane.textContent = vm.pc === null ? ""
      : [`pc=${vm.pc} cycles=${vm.cycles}`,
         ...vm.regs.map((r, i) => `x${i}=${r}`)].join("\n");
    terminal.textContent = vm.uartScrollback;
    for (let pin = 0; pin < GPIO_COUNT; pin++) {
      lamps[pin].style.color = vm.gpioLamps[pin] ? "#e33" : "#444";
      switches[pin].checked = vm.gpioSwitches[pin] === 1;
    }
    leds.forEach((led, i) => {
      led.style.background =
        i < vm.neopixels.length ? `#${vm.neopixels[i]}` : "#111";
    });
    bpList.replaceChildren(
      ...vm.breakpoints.map((addr) => {
        const item = el("li", undefined, addr);
        item.onclick = () => client.clearBreakpoint(addr);
        return item;
      }));
    statsPane.textContent = vm.stats === null ? ""
      : `cycles=${vm.stats.cycles} instret=${vm.stats.instret} ` +
        `ipc=${vm.stats.ipc.toFixed(3)}`;
  }
}
