import { api, connectTelemetry } from "./api.js";
import { MissionEditor, Tool } from "./mission.js";
import { Raster, renderMap } from "./render.js";
import { applyFrame, checkStale, initialView, markDisconnected,
         TelemetryView } from "./telemetry.js";
import { TeleopState } from "./teleop.js";
import { fitTransform, ViewTransform } from "./transform.js";
import { drawPath, drawRegion, drawRover, drawWaypoints } from "./overlay.js";

const MAP_BOX = { width: 880, height: 560 };
const ROVER_RADIUS_M = 0.15;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

class App {
  private canvas = el<HTMLCanvasElement>("map-canvas");
  private ctx = this.canvas.getContext("2d")!;
  private banner = el<HTMLDivElement>("banner");
  private view: TelemetryView = initialView();
  private mapImage: ImageData | null = null;
  private tf: ViewTransform | null = null;
  private editor: MissionEditor | null = null;
  private teleop = new TeleopState();
  private missionInFlight = false;

  start(): void {
    connectTelemetry(
      (frame) => {
        this.view = applyFrame(this.view, frame, Date.now());
        this.refreshStatus();
        this.draw();
      },
      () => {
        this.view = markDisconnected(this.view);
        this.showBanner("telemetry disconnected — reconnecting");
      },
      () => {
        this.teleop.releaseAll();
        this.hideBanner();
      },
    );

    window.setInterval(() => {
      this.view = checkStale(this.view, Date.now());
      if (this.view.stale) this.showBanner("telemetry stale (> 2 s)");
    }, 500);

    window.setInterval(() => this.teleopTick(), 100); // 10 Hz while keys held
    window.setInterval(() => this.refreshMap(), 1000);

    document.addEventListener("keydown", (ev) => {
      if (ev.repeat) return;
      this.teleop.keyDown(ev.key);
    });
    document.addEventListener("keyup", (ev) => this.teleop.keyUp(ev.key));
    window.addEventListener("blur", () => this.teleop.releaseAll());

    this.canvas.addEventListener("click", (ev) => {
      if (!this.editor) return;
      const rect = this.canvas.getBoundingClientRect();
      const ok = this.editor.click(ev.clientX - rect.left, ev.clientY - rect.top);
      if (!ok) this.flashBanner("click outside the map ignored");
      this.refreshMissionButtons();
      this.draw();
    });

    this.bindButton("btn-start-mapping", () => api.command("start_mapping"));
    this.bindButton("btn-finish-mapping", () => api.command("finish_mapping"));
    this.bindButton("btn-pause", () => api.command("pause"));
    this.bindButton("btn-resume", () => api.command("resume"));
    this.bindButton("btn-abort", () => api.command("abort"));
    el<HTMLButtonElement>("btn-undo").addEventListener("click", () => {
      this.editor?.undo();
      this.refreshMissionButtons();
      this.draw();
    });
    el<HTMLButtonElement>("btn-clear").addEventListener("click", () => {
      this.editor?.clear();
      this.refreshMissionButtons();
      this.draw();
    });
    el<HTMLButtonElement>("btn-send-mission").addEventListener("click",
      () => this.sendMission());
    for (const tool of ["waypoints", "coverage"] as Tool[]) {
      el<HTMLInputElement>(`tool-${tool}`).addEventListener("change", () => {
        this.editor?.setTool(tool);
        this.refreshMissionButtons();
        this.draw();
      });
    }
    this.refreshMap();
  }

  private bindButton(id: string, action: () => Promise<{ message: string } | null>): void {
    el<HTMLButtonElement>(id).addEventListener("click", async () => {
      const err = await action();
      if (err) this.flashBanner(err.message);
    });
  }

  private async teleopTick(): Promise<void> {
    const cmd = this.teleop.tick();
    if (cmd === null) return;
    await api.teleop(cmd.v, cmd.omega); // rejections outside MAPPING are expected
  }

  private async refreshMap(): Promise<void> {
    try {
      const payload = await api.map();
      if (payload === null) return;
      if (this.tf === null) {
        this.tf = fitTransform(payload.meta, MAP_BOX.width, MAP_BOX.height);
        const size = this.tf.canvasSize();
        this.canvas.width = size.width;
        this.canvas.height = size.height;
        this.editor = new MissionEditor(this.tf);
      }
      const raster = new Raster(this.canvas.width, this.canvas.height);
      renderMap(payload, this.tf, raster);
      const image = this.ctx.createImageData(raster.width, raster.height);
      image.data.set(raster.data);
      this.mapImage = image;
      this.hideBanner();
      this.draw();
    } catch {
      this.showBanner("map fetch failed — keeping previous frame");
    }
  }

  private async sendMission(): Promise<void> {
    if (!this.editor || this.missionInFlight || !this.editor.canSubmit()) return;
    this.missionInFlight = true;
    const button = el<HTMLButtonElement>("btn-send-mission");
    button.disabled = true;
    try {
      const err = await api.mission(this.editor.missionJson());
      if (err) {
        this.flashBanner(`mission rejected: ${err.message}`);
      } else {
        this.editor.clear();
      }
    } finally {
      this.missionInFlight = false;
      this.refreshMissionButtons();
      this.draw();
    }
  }

  private refreshMissionButtons(): void {
    const button = el<HTMLButtonElement>("btn-send-mission");
    button.disabled = this.missionInFlight || !this.editor || !this.editor.canSubmit();
  }

  private refreshStatus(): void {
    el("stat-mode").textContent = this.view.mode;
    el("stat-cleaned").textContent = String(this.view.cleaned);
    el("stat-debris").textContent = String(this.view.debrisRemaining);
    el("stat-stamp").textContent = this.view.stamp.toFixed(1);
    const bar = el<HTMLDivElement>("progress-fill");
    bar.style.width = `${(this.view.progress * 100).toFixed(1)}%`;
    el("stat-progress").textContent = `${(this.view.progress * 100).toFixed(0)}%`;
    el("stat-collision").textContent = this.view.collision ? "COLLISION" : "";
    if (this.view.mode === "IDLE" && this.view.progress >= 1.0) {
      el("summary").textContent =
        `mission complete — cleaned ${this.view.cleaned} debris cells`;
    }
  }

  private draw(): void {
    if (!this.tf) return;
    const ctx = this.ctx;
    if (this.mapImage) {
      ctx.putImageData(this.mapImage, 0, 0);
    } else {
      ctx.fillStyle = "#9ca4ac";
      ctx.fillRect(0, 0, this.canvas.width, this.canvas.height);
    }
    if (this.view.path.length) drawPath(ctx, this.tf, this.view.path, "#c0392b");
    if (this.view.trail.length) drawPath(ctx, this.tf, this.view.trail, "#2980b9", 1);
    if (this.editor) {
      drawWaypoints(ctx, this.tf, this.editor.waypoints);
      if (this.editor.region) drawRegion(ctx, this.tf, this.editor.region);
    }
    if (this.view.pose) drawRover(ctx, this.tf, this.view.pose, ROVER_RADIUS_M, "#27ae60");
  }

  private showBanner(text: string): void {
    this.banner.textContent = text;
    this.banner.style.display = "block";
  }

  private flashBanner(text: string): void {
    this.showBanner(text);
    window.setTimeout(() => this.hideBanner(), 2500);
  }

  private hideBanner(): void {
    this.banner.style.display = "none";
  }
}

new App().start();
