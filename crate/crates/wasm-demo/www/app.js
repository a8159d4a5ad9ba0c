import init, { simulate, oracle_exact, extract_answer } from "./pkg/debate_lab_wasm.js";

const MAX_AGENTS = 4;
const SLIDERS = [
  { key: "p_correct", label: "p(correct)" },
  { key: "sycophancy", label: "sycophancy" },
  { key: "revise_prob", label: "revise" },
];
const DEFAULT_AGENTS = [
  { p_correct: 0.3, sycophancy: 0.8, revise_prob: 0.1 },
  { p_correct: 0.3, sycophancy: 0.8, revise_prob: 0.1 },
  { p_correct: 0.9, sycophancy: 0.8, revise_prob: 0.1 },
];

const el = (id) => document.getElementById(id);
const agentsBox = el("agents");

function addAgentRow(values) {
  if (agentsBox.children.length >= MAX_AGENTS) return;
  const row = document.createElement("div");
  row.className = "agent-row";
  const name = document.createElement("div");
  name.className = "name";
  row.appendChild(name);
  for (const { key, label } of SLIDERS) {
    const wrap = document.createElement("div");
    wrap.className = "slider";
    const lab = document.createElement("label");
    const out = document.createElement("output");
    const input = document.createElement("input");
    input.type = "range";
    input.min = "0";
    input.max = "1";
    input.step = "0.05";
    input.value = String(values[key]);
    input.dataset.key = key;
    out.textContent = Number(input.value).toFixed(2);
    input.addEventListener("input", () => (out.textContent = Number(input.value).toFixed(2)));
    lab.textContent = label + " ";
    lab.appendChild(out);
    wrap.append(lab, input);
    row.appendChild(wrap);
  }
  const remove = document.createElement("button");
  remove.className = "remove";
  remove.textContent = "×";
  remove.title = "remove agent";
  remove.addEventListener("click", () => {
    if (agentsBox.children.length > 1) {
      row.remove();
      renumber();
    }
  });
  row.appendChild(remove);
  agentsBox.appendChild(row);
  renumber();
}

function renumber() {
  [...agentsBox.children].forEach((row, i) => {
    row.querySelector(".name").textContent = `agent ${i}`;
  });
}

function readAgents() {
  return [...agentsBox.children].map((row) => {
    const out = {};
    row.querySelectorAll("input[type=range]").forEach((input) => {
      out[input.dataset.key] = Number(input.value);
    });
    return out;
  });
}

function fmtPct(v) {
  return (100 * v).toFixed(1) + "%";
}

// --- canvas charts ---------------------------------------------------------

function clearCanvas(canvas) {
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  return ctx;
}

function drawAccuracyChart(canvas, mc, exact) {
  const ctx = clearCanvas(canvas);
  const W = canvas.width, H = canvas.height;
  const pad = { l: 46, r: 14, t: 14, b: 30 };
  const rounds = mc.per_round_accuracy.length;
  const x = (r) => pad.l + ((W - pad.l - pad.r) * (rounds === 1 ? 0.5 : r / (rounds - 1)));
  const y = (v) => pad.t + (H - pad.t - pad.b) * (1 - v);

  ctx.strokeStyle = "#e2e8f0";
  ctx.fillStyle = "#64748b";
  ctx.font = "11px system-ui";
  ctx.textAlign = "right";
  for (let g = 0; g <= 10; g += 2) {
    const v = g / 10;
    ctx.beginPath();
    ctx.moveTo(pad.l, y(v));
    ctx.lineTo(W - pad.r, y(v));
    ctx.stroke();
    ctx.fillText((g * 10) + "%", pad.l - 6, y(v) + 4);
  }
  ctx.textAlign = "center";
  for (let r = 0; r < rounds; r++) {
    ctx.fillText("round " + (r + 1), x(r), H - 8);
  }

  const drawSeries = (values, color, dashed, width) => {
    if (!values) return;
    ctx.strokeStyle = color;
    ctx.lineWidth = width;
    ctx.setLineDash(dashed ? [6, 4] : []);
    ctx.beginPath();
    values.forEach((v, r) => (r === 0 ? ctx.moveTo(x(r), y(v)) : ctx.lineTo(x(r), y(v))));
    ctx.stroke();
    ctx.setLineDash([]);
    ctx.fillStyle = color;
    values.forEach((v, r) => {
      ctx.beginPath();
      ctx.arc(x(r), y(v), dashed ? 2.5 : 3.5, 0, Math.PI * 2);
      ctx.fill();
    });
  };

  drawSeries(mc.per_round_agent_accuracy, "#94a3b8", false, 1.5);
  drawSeries(mc.per_round_accuracy, "#2563eb", false, 2.5);
  if (exact) {
    drawSeries(exact.per_round_agent_accuracy, "#94a3b8", true, 1.2);
    drawSeries(exact.per_round_accuracy, "#2563eb", true, 1.6);
  }
}

function drawTransitionsChart(canvas, mc, exact) {
  const ctx = clearCanvas(canvas);
  const W = canvas.width, H = canvas.height;
  const pad = { l: 46, r: 14, t: 14, b: 34 };
  const slots = mc.n_agents * Math.max(mc.rounds - 1, 1) * mc.n_questions;
  const bars = [
    { label: "c→c", mcv: mc.transitions_combined.cc / slots, color: "#86efac" },
    { label: "c→i", mcv: mc.transitions_combined.ci / slots, color: "#dc2626" },
    { label: "i→c", mcv: mc.transitions_combined.ic / slots, color: "#16a34a" },
    { label: "i→i", mcv: mc.transitions_combined.ii / slots, color: "#cbd5e1" },
  ];
  const exactSlots = exact ? exact.n_agents * Math.max(exact.rounds - 1, 1) : 1;
  const exactVals = exact
    ? [
        exact.transitions_combined.cc / exactSlots,
        exact.transitions_combined.ci / exactSlots,
        exact.transitions_combined.ic / exactSlots,
        exact.transitions_combined.ii / exactSlots,
      ]
    : null;

  const maxV = Math.max(...bars.map((b) => b.mcv), ...(exactVals ?? [0]), 0.05);
  const y = (v) => pad.t + (H - pad.t - pad.b) * (1 - v / (maxV * 1.15));
  const band = (W - pad.l - pad.r) / bars.length;

  ctx.fillStyle = "#64748b";
  ctx.font = "11px system-ui";
  ctx.textAlign = "right";
  ctx.strokeStyle = "#e2e8f0";
  for (let g = 0; g <= 4; g++) {
    const v = (maxV * 1.15 * g) / 4;
    ctx.beginPath();
    ctx.moveTo(pad.l, y(v));
    ctx.lineTo(W - pad.r, y(v));
    ctx.stroke();
    ctx.fillText(fmtPct(v), pad.l - 6, y(v) + 4);
  }

  bars.forEach((bar, i) => {
    const cx = pad.l + band * i + band / 2;
    const bw = Math.min(band * 0.34, 54);
    ctx.fillStyle = bar.color;
    ctx.fillRect(cx - bw - 3, y(bar.mcv), bw, y(0) - y(bar.mcv));
    if (exactVals) {
      const ev = exactVals[i];
      ctx.save();
      ctx.fillStyle = bar.color;
      ctx.globalAlpha = 0.45;
      ctx.fillRect(cx + 3, y(ev), bw, y(0) - y(ev));
      ctx.restore();
      ctx.strokeStyle = "#475569";
      ctx.setLineDash([4, 3]);
      ctx.strokeRect(cx + 3, y(ev), bw, y(0) - y(ev));
      ctx.setLineDash([]);
    }
    ctx.fillStyle = "#334155";
    ctx.textAlign = "center";
    ctx.fillText(bar.label, cx, H - 18);
    ctx.fillText(fmtPct(bar.mcv), cx, H - 5);
  });
}

// --- wiring ----------------------------------------------------------------

function runAll() {
  const button = el("run");
  const errorBox = el("error");
  button.disabled = true;
  errorBox.textContent = "";
  setTimeout(() => {
    try {
      const agents = readAgents();
      const rounds = Number(el("rounds").value);
      const choices = Number(el("choices").value);
      const questions = Math.min(20000, Math.max(1, Number(el("questions").value) || 1000));
      const seed = Math.max(0, Number(el("seed").value) || 0);

      const sim = JSON.parse(simulate(JSON.stringify({ agents, rounds, choices, questions, seed })));
      if (sim.error) throw new Error(sim.error);
      const summary = sim.summary;

      let exact = null;
      if (agents.length <= 4 && rounds <= 3 && choices <= 6) {
        const oracle = JSON.parse(oracle_exact(JSON.stringify({ agents, rounds, choices })));
        if (!oracle.error) exact = oracle;
      }

      el("stats").hidden = false;
      el("stat-wo").textContent = fmtPct(summary.wo_debate);
      el("stat-after").textContent = fmtPct(summary.after_debate);
      const deltaPts = 100 * summary.delta;
      el("stat-delta").textContent = (deltaPts >= 0 ? "+" : "") + deltaPts.toFixed(1) + " pts";
      el("stat-delta-wrap").className = "stat " + (summary.delta < 0 ? "delta-down" : "delta-up");
      el("stat-delta-exact").textContent = exact
        ? (100 * exact.delta >= 0 ? "+" : "") + (100 * exact.delta).toFixed(2) + " pts"
        : "n/a";
      el("stat-flips").textContent =
        summary.transitions_combined.ci + " vs " + summary.transitions_combined.ic;

      drawAccuracyChart(el("accuracy"), summary, exact);
      drawTransitionsChart(el("transitions"), summary, exact);
    } catch (err) {
      errorBox.textContent = String(err.message ?? err);
    } finally {
      button.disabled = false;
    }
  }, 15);
}

function runExtraction() {
  const out = JSON.parse(extract_answer(el("extract-text").value, el("extract-task").value));
  el("extract-out").textContent = out.error ? "error: " + out.error : out.label;
}

init().then(() => {
  DEFAULT_AGENTS.forEach(addAgentRow);
  el("add-agent").addEventListener("click", () =>
    addAgentRow({ p_correct: 0.5, sycophancy: 0.5, revise_prob: 0.1 })
  );
  el("run").addEventListener("click", runAll);
  el("extract-text").addEventListener("input", runExtraction);
  el("extract-task").addEventListener("change", runExtraction);
  runExtraction();
  runAll();
});
