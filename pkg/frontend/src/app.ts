// Dashboard assembly: builds the DOM, wires controls to the command gate,
// and re-renders from store updates. Mirrors the on-device interactions:
// the slider is the remote "rotate to any angle" control and the button is
// the gesture-equivalent toggle.

import { DeviceConnection, SocketFactory } from "./connection";
import { CommandGate } from "./gate";
import type { ServerFrame } from "./protocol";
import { UiState, UiStore } from "./store";

export interface AppOptions {
  url: string;
  socketFactory?: SocketFactory;
  now?: () => number;
  pruneIntervalMs?: number;
}

export interface AppHandle {
  store: UiStore;
  connection: DeviceConnection;
  gate: CommandGate;
  dispose(): void;
}

const TEMPLATE = `
  <header class="topbar">
    <h1>SmartMask</h1>
    <span data-el="status" class="status connecting">connecting</span>
  </header>
  <div data-el="banners" class="banners"></div>
  <main class="layout">
    <section class="card device-card">
      <div class="gauge">
        <div class="gauge-dial"></div>
        <div data-el="needle" class="gauge-needle"></div>
      </div>
      <div class="device-readouts">
        <div data-el="position" class="position">no data</div>
        <div class="readout">angle <strong data-el="angle">–</strong></div>
        <div class="readout">target <strong data-el="target">–</strong></div>
        <div class="readout">temperature <strong data-el="temp">–</strong></div>
      </div>
    </section>
    <section class="card controls-card">
      <label class="slider-label">
        mask angle <span data-el="slider-value">0&deg;</span>
        <input data-el="slider" type="range" min="0" max="180" step="1" value="0" />
      </label>
      <button data-el="toggle" class="toggle-button">open / close</button>
      <div data-el="error" class="inline-error" hidden></div>
    </section>
    <section class="card feed-card">
      <h2>Event feed</h2>
      <ul data-el="feed" class="feed"></ul>
    </section>
  </main>
`;

function query<T extends HTMLElement>(root: HTMLElement, name: string): T {
  const el = root.querySelector(`[data-el="${name}"]`);
  if (!el) throw new Error(`missing element ${name}`);
  return el as T;
}

function describeFrame(frame: ServerFrame): string {
  switch (frame.type) {
    case "state":
      return `state: ${frame.position} at ${frame.angle_deg.toFixed(0)}° (target ${frame.target_deg.toFixed(0)}°)`;
    case "alert":
      return `alert [${frame.kind}]: ${frame.message}`;
    case "ack":
      return `ack: ${frame.of}`;
    case "error":
      return `error [${frame.code}]: ${frame.message}`;
  }
}

export function mountApp(root: HTMLElement, options: AppOptions): AppHandle {
  const now = options.now ?? (() => Date.now());
  root.innerHTML = TEMPLATE;

  const statusEl = query<HTMLSpanElement>(root, "status");
  const bannersEl = query<HTMLDivElement>(root, "banners");
  const needleEl = query<HTMLDivElement>(root, "needle");
  const positionEl = query<HTMLDivElement>(root, "position");
  const angleEl = query<HTMLElement>(root, "angle");
  const targetEl = query<HTMLElement>(root, "target");
  const tempEl = query<HTMLElement>(root, "temp");
  const sliderEl = query<HTMLInputElement>(root, "slider");
  const sliderValueEl = query<HTMLSpanElement>(root, "slider-value");
  const toggleEl = query<HTMLButtonElement>(root, "toggle");
  const errorEl = query<HTMLDivElement>(root, "error");
  const feedEl = query<HTMLUListElement>(root, "feed");

  const store = new UiStore();
  const connection = new DeviceConnection(
    options.url,
    {
      onStatus: (status) => {
        if (status === "lost") gate.reset(); // replies to in-flight commands are gone
        store.setConnection(status);
      },
      onFrame: (frame) => {
        if (frame.type === "ack" || frame.type === "error") gate.settle();
        store.applyFrame(frame, now());
      },
    },
    options.socketFactory,
  );
  const gate = new CommandGate((frame) => connection.send(frame));

  let dragging = false;

  sliderEl.addEventListener("pointerdown", () => {
    dragging = true;
  });
  sliderEl.addEventListener("input", () => {
    dragging = true; // keyboard / programmatic drags too
    sliderValueEl.textContent = `${sliderEl.value}°`;
  });
  sliderEl.addEventListener("change", () => {
    dragging = false;
    gate.commit({ type: "set_angle", angle: Number(sliderEl.value) });
  });
  toggleEl.addEventListener("click", () => {
    gate.commit({ type: "toggle" });
  });

  function renderBanners(state: UiState): void {
    bannersEl.textContent = "";
    for (const banner of state.banners) {
      const el = document.createElement("div");
      el.className = `banner banner-${banner.kind}`;
      el.setAttribute("role", "alert");
      el.dataset.bannerId = String(banner.id);
      el.textContent =
        banner.kind === "fever" ? `⚠ fever alert — ${banner.message}` : banner.message;
      el.addEventListener("click", () => store.dismissBanner(banner.id));
      bannersEl.appendChild(el);
    }
  }

  function render(state: UiState): void {
    statusEl.textContent = state.connection;
    statusEl.className = `status ${state.connection}`;

    if (state.device) {
      const device = state.device;
      needleEl.style.transform = `rotate(${device.angle_deg - 90}deg)`;
      positionEl.textContent = device.position;
      positionEl.className = `position position-${device.position}`;
      angleEl.textContent = `${device.angle_deg.toFixed(0)}°`;
      targetEl.textContent = `${device.target_deg.toFixed(0)}°`;
      tempEl.textContent = device.last_temp_c === null ? "–" : `${device.last_temp_c.toFixed(1)} °C`;
      if (!dragging) {
        sliderEl.value = String(Math.round(device.target_deg));
        sliderValueEl.textContent = `${Math.round(device.target_deg)}°`;
      }
    }

    errorEl.hidden = state.lastError === null;
    errorEl.textContent = state.lastError ?? "";

    renderBanners(state);

    feedEl.textContent = "";
    for (const entry of state.feed) {
      const li = document.createElement("li");
      li.textContent = describeFrame(entry.frame);
      feedEl.appendChild(li);
    }
  }

  const unsubscribe = store.subscribe(render);
  render(store.state);

  const pruneTimer = setInterval(() => store.prune(now()), options.pruneIntervalMs ?? 500);
  connection.start();

  return {
    store,
    connection,
    gate,
    dispose() {
      clearInterval(pruneTimer);
      unsubscribe();
      connection.stop();
    },
  };
}
