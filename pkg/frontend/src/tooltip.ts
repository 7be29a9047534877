import { DocLink, DocNode, GraphDocument } from "./types";

const MAX_EXAMPLES = 5;

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Sum one histogram family over the links incident to a node. */
export function incidentHistogram(
  doc: GraphDocument,
  nodeId: string,
  family: "severity" | "duration" | "dosage"
): Record<string, number> {
  const totals: Record<string, number> = {};
  for (const link of doc.links) {
    if (link.source !== nodeId && link.target !== nodeId) continue;
    for (const [bucket, count] of Object.entries(link[family])) {
      totals[bucket] = (totals[bucket] ?? 0) + count;
    }
  }
  return totals;
}

function histogramRows(
  title: string,
  histogram: Record<string, number>
): string {
  const entries = Object.entries(histogram).sort((a, b) => b[1] - a[1]);
  if (entries.length === 0) {
    return `<div class="hist-empty">no ${title} reported</div>`;
  }
  const rows = entries
    .map(
      ([bucket, count]) =>
        `<div class="hist-row" data-family="${title}" data-bucket="${escapeHtml(
          bucket
        )}">${escapeHtml(bucket)}: <span class="count">${count}</span></div>`
    )
    .join("");
  return `<div class="hist" data-family="${title}">${rows}</div>`;
}

/** Node panel: total mentions plus the three property histograms. */
export function nodeTooltipHtml(doc: GraphDocument, node: DocNode): string {
  const parts = [
    `<div class="tip-title">${escapeHtml(node.label)}</div>`,
    `<div class="tip-total">total mentions: <span class="count">${node.frequency}</span></div>`,
  ];
  if (node.type === "side_effect" || node.type === "medication") {
    for (const family of ["severity", "duration", "dosage"] as const) {
      parts.push(histogramRows(family, incidentHistogram(doc, node.id, family)));
    }
  }
  return parts.join("");
}

/** Edge panel: co-occurrence weight and up to five example quotes. */
export function edgeTooltipHtml(doc: GraphDocument, link: DocLink): string {
  const source = doc.nodes.find((n) => n.id === link.source);
  const target = doc.nodes.find((n) => n.id === link.target);
  const parts = [
    `<div class="tip-title">${escapeHtml(source?.label ?? link.source)} &mdash; ${escapeHtml(
      target?.label ?? link.target
    )}</div>`,
    `<div class="tip-weight">co-occurrences: <span class="count">${link.weight}</span></div>`,
  ];
  const examples = link.examples.slice(0, MAX_EXAMPLES);
  if (examples.length > 0) {
    const quotes = examples
      .map((e) => `<li class="example">${escapeHtml(e.description)}</li>`)
      .join("");
    parts.push(`<ul class="examples">${quotes}</ul>`);
  }
  return parts.join("");
}
