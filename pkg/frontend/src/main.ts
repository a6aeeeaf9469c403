// Browser wiring: one canvas stack (frame, mask overlay, heat overlay,
// pending strokes), a toolbar, a timeline, and the guidance strip. All
// segmentation data comes from the service; this file only draws it.

import { ApiClient } from "./api.js";
import { decodeRle } from "./rle.js";
import { renderMaskOverlay, renderReliabilityHeat, objectColor } from "./overlay.js";
import { UiSession } from "./session.js";
import type { StrokePoint } from "./strokes.js";

const api = new ApiClient("");

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

async function start(): Promise<void> {
  const info = await api.createSession({
    synthetic: { num_frames: 20, height: 64, width: 64, num_objects: 2, seed: 0 },
    config: { stride: 4 },
  });
  const session = new UiSession(api, info, {
    onNotice: (message) => {
      const bar = el<HTMLDivElement>("notice");
      bar.textContent = message;
      bar.classList.add("visible");
      setTimeout(() => bar.classList.remove("visible"), 4000);
    },
  });

  const frameCanvas = el<HTMLCanvasElement>("frame");
  const maskCanvas = el<HTMLCanvasElement>("mask");
  const heatCanvas = el<HTMLCanvasElement>("heat");
  const inkCanvas = el<HTMLCanvasElement>("ink");
  for (const canvas of [frameCanvas, maskCanvas, heatCanvas, inkCanvas]) {
    canvas.width = info.frame_width;
    canvas.height = info.frame_height;
  }

  const timeline = el<HTMLInputElement>("timeline");
  timeline.max = String(info.num_frames - 1);

  async function drawFrame(): Promise<void> {
    el<HTMLSpanElement>("cursor-label").textContent =
      `frame ${session.cursor + 1} / ${info.num_frames}`;
    timeline.value = String(session.cursor);
    const image = new Image();
    image.src = api.frameUrl(session.sessionId, session.cursor);
    await image.decode();
    frameCanvas.getContext("2d")!.drawImage(image, 0, 0);

    const maskCtx = maskCanvas.getContext("2d")!;
    maskCtx.clearRect(0, 0, maskCanvas.width, maskCanvas.height);
    const heatCtx = heatCanvas.getContext("2d")!;
    heatCtx.clearRect(0, 0, heatCanvas.width, heatCanvas.height);
    if (session.info.round > 0) {
      const masks = await api.getMasks(session.sessionId, session.cursor);
      const labels = decodeRle(masks.mask);
      const overlay = renderMaskOverlay(labels, masks.mask.width, masks.mask.height, 0.45);
      maskCtx.putImageData(new ImageData(overlay, masks.mask.width, masks.mask.height), 0, 0);
      if (session.heatOverlayEnabled) {
        const reliability = await api.getReliability(session.sessionId, session.cursor);
        const heat = renderReliabilityHeat(
          reliability.values, info.frame_width, info.frame_height, 0.5);
        heatCtx.putImageData(new ImageData(heat, info.frame_width, info.frame_height), 0, 0);
      }
    }
    drawInk();
  }

  function drawInk(): void {
    const ctx = inkCanvas.getContext("2d")!;
    ctx.clearRect(0, 0, inkCanvas.width, inkCanvas.height);
    for (const stroke of session.pendingStrokes) {
      const [r, g, b] = stroke.objectId === 0 ? [20, 20, 20] : objectColor(stroke.objectId);
      ctx.fillStyle = `rgb(${r},${g},${b})`;
      for (const p of stroke.points) {
        ctx.fillRect(Math.round(p.x), Math.round(p.y), 1, 1);
      }
    }
  }

  function renderGuidance(): void {
    const strip = el<HTMLDivElement>("guidance-strip");
    strip.replaceChildren();
    if (!session.guidance) return;
    for (const candidate of session.guidance.candidates) {
      const card = document.createElement("button");
      card.className = "candidate";
      const thumb = document.createElement("img");
      thumb.src = candidate.thumbnail_url;
      thumb.width = 72;
      thumb.height = 72;
      const label = document.createElement("span");
      label.textContent = `#${candidate.frame_index + 1} r=${candidate.r_score.toFixed(3)}`;
      card.append(thumb, label);
      card.addEventListener("click", () => {
        session.jumpToCandidate(candidate);
        void drawFrame();
      });
      strip.append(card);
    }
    if (session.allAnnotated) {
      const done = document.createElement("span");
      done.textContent = "all frames annotated — press satisfied to finish";
      strip.append(done);
    }
  }

  // brush toolbar
  const toolbar = el<HTMLDivElement>("brushes");
  for (let k = 1; k <= info.num_objects; k++) {
    const button = document.createElement("button");
    const [r, g, b] = objectColor(k);
    button.style.background = `rgb(${r},${g},${b})`;
    button.textContent = `object ${k}`;
    button.addEventListener("click", () => session.setBrush({ kind: "object", objectId: k }));
    toolbar.append(button);
  }
  el<HTMLButtonElement>("brush-bg").addEventListener("click", () =>
    session.setBrush({ kind: "background" }));
  el<HTMLButtonElement>("brush-eraser").addEventListener("click", () =>
    session.setBrush({ kind: "eraser" }));

  // stroke capture
  let activePath: StrokePoint[] | null = null;
  function canvasPoint(event: PointerEvent): StrokePoint {
    const rect = inkCanvas.getBoundingClientRect();
    return {
      x: ((event.clientX - rect.left) / rect.width) * info.frame_width,
      y: ((event.clientY - rect.top) / rect.height) * info.frame_height,
    };
  }
  inkCanvas.addEventListener("pointerdown", (event) => {
    activePath = [canvasPoint(event)];
  });
  inkCanvas.addEventListener("pointermove", (event) => {
    if (activePath) {
      activePath.push(canvasPoint(event));
      if (session.brush.kind !== "eraser") {
        session.addStroke([activePath[activePath.length - 1]]);
        drawInk();
      }
    }
  });
  window.addEventListener("pointerup", () => {
    if (activePath && session.brush.kind === "eraser") {
      session.addStroke(activePath);
      drawInk();
    }
    activePath = null;
  });

  // actions
  el<HTMLButtonElement>("submit").addEventListener("click", async () => {
    const summary = await session.submit();
    if (summary) {
      el<HTMLSpanElement>("round-label").textContent =
        `round ${summary.round} · mean r ${summary.mean_r.toFixed(3)}`;
      await session.refreshGuidance(
        el<HTMLSelectElement>("guidance-mode").value as "rs1" | "rs4");
      renderGuidance();
      if (session.proposedJump !== null) {
        el<HTMLButtonElement>("confirm-jump").hidden = false;
      }
      await drawFrame();
    }
  });
  el<HTMLButtonElement>("retry").addEventListener("click", () => void session.retryQueued());
  el<HTMLButtonElement>("confirm-jump").addEventListener("click", async () => {
    session.confirmJump();
    el<HTMLButtonElement>("confirm-jump").hidden = true;
    await drawFrame();
  });
  el<HTMLInputElement>("heat-toggle").addEventListener("change", (event) => {
    session.heatOverlayEnabled = (event.target as HTMLInputElement).checked;
    void drawFrame();
  });
  timeline.addEventListener("input", () => {
    session.setCursor(Number(timeline.value));
    void drawFrame();
  });
  el<HTMLButtonElement>("satisfied").addEventListener("click", async () => {
    const bytes = await session.satisfied();
    const blob = new Blob([bytes.buffer as ArrayBuffer], { type: "application/json" });
    const link = document.createElement("a");
    link.href = URL.createObjectURL(blob);
    link.download = `${session.sessionId}.json`;
    link.click();
  });

  await drawFrame();
}

void start();
