/** Console wiring: one gateway session, one push subscription, and DOM
 * controls that forward simulation inputs to the documented endpoints. */

import { GatewayClient, GatewayError, PushSubscription } from "./api.js";
import type { Envelope, NavView, RideView, StateView } from "./api.js";
import { cellInBounds, LEGEND, renderMapText } from "./mapview.js";
import { Transcript } from "./transcript.js";

const CANCELLABLE = new Set(["Requested", "DriverAssigned", "Arriving"]);
const FRAME_KEYS = ["zebra_crossing", "starbucks_cup", "person", "blocked_path", "street_corner"];

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

class ConsoleApp {
  private readonly client = new GatewayClient("");
  private readonly transcript = new Transcript();
  private sid = "";
  private nav: NavView | null = null;
  private subscription: PushSubscription | null = null;

  async boot(): Promise<void> {
    try {
      const { session_id } = await this.client.createSession();
      this.sid = session_id;
      el("session-label").textContent = session_id;
      this.setOnline(true);
    } catch (error) {
      this.showError(error);
      return;
    }
    this.subscription = new PushSubscription(
      this.client,
      this.sid,
      (envelopes) => this.onEnvelopes(envelopes),
      (error) => this.showError(error),
    );
    void this.subscription.start();
    this.wireControls();
    await this.refreshState();
  }

  private onEnvelopes(envelopes: Envelope[]): void {
    this.clearError();
    for (const entry of this.transcript.applyEnvelopes(envelopes)) {
      this.appendBubble(entry.direction, entry.text, entry.kind);
    }
    void this.refreshState();
  }

  private appendBubble(direction: string, text: string, kind: string): void {
    const bubble = document.createElement("div");
    bubble.className =
      direction === "UserSaid" ? "bubble user" : `bubble assistant kind-${kind}`;
    bubble.textContent = text;
    const log = el("transcript");
    log.appendChild(bubble);
    log.scrollTop = log.scrollHeight;
  }

  private wireControls(): void {
    const input = el<HTMLInputElement>("utterance-input");
    const send = el<HTMLButtonElement>("send-btn");
    const toggleSend = () => {
      send.disabled = input.value.trim() === "";
    };
    toggleSend();
    input.addEventListener("input", toggleSend);
    const submit = () => {
      const text = input.value.trim();
      if (!text) return;
      input.value = "";
      toggleSend();
      this.transcript.addUser(text);
      this.appendBubble("UserSaid", text, "Utterance");
      this.call(() => this.client.utterance(this.sid, text));
    };
    send.addEventListener("click", submit);
    input.addEventListener("keydown", (event) => {
      if (event.key === "Enter") submit();
    });

    const frames = el("frame-buttons");
    for (const key of FRAME_KEYS) {
      const button = document.createElement("button");
      button.textContent = key;
      button.addEventListener("click", () =>
        this.call(() => this.client.injectFrame(this.sid, key)),
      );
      frames.appendChild(button);
    }

    const slider = el<HTMLInputElement>("battery-slider");
    slider.addEventListener("change", () => {
      el("battery-value").textContent = `${slider.value}%`;
      this.call(() => this.client.setBattery(this.sid, Number(slider.value)));
    });
    slider.addEventListener("input", () => {
      el("battery-value").textContent = `${slider.value}%`;
    });

    el<HTMLButtonElement>("nav-start-btn").addEventListener("click", () => {
      const destination = el<HTMLInputElement>("nav-dest").value.trim();
      if (!destination) return;
      this.call(async () => {
        const { nav } = await this.client.startNav(this.sid, destination);
        this.renderNav(nav);
      });
    });
    el<HTMLButtonElement>("tick-btn").addEventListener("click", () =>
      this.call(() => this.client.tick(this.sid, 1)),
    );
    el<HTMLButtonElement>("tick5-btn").addEventListener("click", () =>
      this.call(() => this.client.tick(this.sid, 5)),
    );

    el<HTMLButtonElement>("obstacle-btn").addEventListener("click", () => {
      const x = Number(el<HTMLInputElement>("obstacle-x").value);
      const y = Number(el<HTMLInputElement>("obstacle-y").value);
      const note = el("obstacle-note");
      if (!this.nav) {
        note.textContent = "start a walk first";
        return;
      }
      if (!cellInBounds(this.nav, x, y)) {
        note.textContent = `cell must be on the ${this.nav.map.width}x${this.nav.map.height} map`;
        return;
      }
      note.textContent = "";
      this.call(async () => {
        const { nav } = await this.client.injectObstacle(this.sid, [x, y]);
        this.renderNav(nav);
      });
    });
  }

  private call(action: () => Promise<unknown>): void {
    action()
      .then(() => this.clearError())
      .then(() => this.refreshState())
      .catch((error) => this.showError(error));
  }

  private async refreshState(): Promise<void> {
    let state: StateView;
    try {
      state = await this.client.state(this.sid);
    } catch (error) {
      this.showError(error);
      return;
    }
    this.setOnline(true);
    el("dialog-state").textContent = state.state;
    if (state.battery) {
      el("battery-state").textContent = state.battery.below_threshold
        ? `${state.battery.level_percent}% (low)`
        : `${state.battery.level_percent}%`;
    }
    this.renderNav(state.nav);
    this.renderRides(state.rides);
  }

  private renderNav(nav: NavView | null): void {
    this.nav = nav;
    el("map-pre").textContent = nav ? renderMapText(nav) : "(no walk in progress)";
    el("map-legend").textContent = nav ? LEGEND : "";
    el("nav-status").textContent = nav
      ? `to ${nav.destination_place}${nav.done ? " (done)" : ""}`
      : "";
  }

  private renderRides(rides: RideView[]): void {
    const list = el("rides-list");
    list.textContent = "";
    for (const ride of rides) {
      const row = document.createElement("div");
      row.className = "ride-row";
      const label = document.createElement("span");
      const driver = ride.driver_name ? ` driver ${ride.driver_name}` : "";
      label.textContent = `${ride.ride_id} to ${ride.destination_place}: ${ride.state}${driver}`;
      row.appendChild(label);
      if (CANCELLABLE.has(ride.state)) {
        const cancel = document.createElement("button");
        cancel.textContent = "cancel";
        cancel.addEventListener("click", () =>
          this.call(() => this.client.cancelRide(this.sid, ride.ride_id)),
        );
        row.appendChild(cancel);
      }
      list.appendChild(row);
    }
  }

  private setOnline(ok: boolean): void {
    el("status-dot").className = ok ? "dot online" : "dot offline";
  }

  private showError(error: unknown): void {
    const banner = el("error-banner");
    banner.textContent =
      error instanceof GatewayError
        ? `gateway error ${error.status}: ${error.message}`
        : `gateway unreachable: ${String(error)}`;
    banner.classList.remove("hidden");
    if (!(error instanceof GatewayError)) this.setOnline(false);
  }

  private clearError(): void {
    el("error-banner").classList.add("hidden");
  }
}

void new ConsoleApp().boot();
