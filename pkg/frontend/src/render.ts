import * as d3 from "d3";

import { focusSubset, linkKey } from "./focus";
import { edgeTooltipHtml, nodeTooltipHtml } from "./tooltip";
import { DocLink, DocNode, GraphDocument } from "./types";

const EDGE_RENDER_FLOOR = 1; // zero-thickness (weight 1) edges stay visible

export interface ViewOptions {
  width?: number;
  height?: number;
  /** Run the simulation synchronously for this many ticks (tests). */
  settleTicks?: number;
  chargeStrength?: number;
  linkDistance?: number;
}

interface SimNode extends DocNode, d3.SimulationNodeDatum {}

interface SimLink extends d3.SimulationLinkDatum<SimNode> {
  doc: DocLink;
  key: string;
}

export class GraphView {
  private readonly doc: GraphDocument;
  private readonly svg: d3.Selection<SVGSVGElement, unknown, null, undefined>;
  private readonly linkGroup: d3.Selection<SVGGElement, unknown, null, undefined>;
  private readonly nodeGroup: d3.Selection<SVGGElement, unknown, null, undefined>;
  private readonly labelGroup: d3.Selection<SVGGElement, unknown, null, undefined>;
  private readonly tooltip: HTMLDivElement;
  private readonly banner: HTMLDivElement;
  private readonly clearButton: HTMLButtonElement;
  private readonly simulation: d3.Simulation<SimNode, SimLink>;
  private readonly simNodes: SimNode[];
  private readonly simLinks: SimLink[];
  private selectedId: string | null = null;

  constructor(container: HTMLElement, doc: GraphDocument, options: ViewOptions = {}) {
    this.doc = doc;
    const width = options.width ?? 960;
    const height = options.height ?? 640;

    const root = d3.select(container);
    root.selectAll("*").remove();

    this.banner = root
      .append("div")
      .attr("class", "metadata-banner")
      .node() as HTMLDivElement;
    this.banner.textContent =
      `${doc.metadata.medication_count} medications, ` +
      `${doc.metadata.side_effect_count} side effects, ` +
      `${doc.metadata.link_count} links, ` +
      `${doc.metadata.relation_count} relations`;

    this.clearButton = root
      .append("button")
      .attr("class", "clear-selection")
      .style("display", "none")
      .text("show full graph")
      .on("click", () => this.clearFocus())
      .node() as HTMLButtonElement;

    this.svg = root
      .append("svg")
      .attr("width", width)
      .attr("height", height)
      .attr("viewBox", `0 0 ${width} ${height}`);
    this.linkGroup = this.svg.append("g").attr("class", "links");
    this.nodeGroup = this.svg.append("g").attr("class", "nodes");
    this.labelGroup = this.svg.append("g").attr("class", "labels");

    this.tooltip = root
      .append("div")
      .attr("class", "tooltip")
      .style("display", "none")
      .node() as HTMLDivElement;

    this.simNodes = doc.nodes.map((n) => ({ ...n }));
    this.simLinks = doc.links.map((l) => ({
      source: l.source,
      target: l.target,
      doc: l,
      key: linkKey(l.source, l.target),
    }));

    this.simulation = d3
      .forceSimulation<SimNode>(this.simNodes)
      .force(
        "link",
        d3
          .forceLink<SimNode, SimLink>(this.simLinks)
          .id((d) => d.id)
          .distance(options.linkDistance ?? 90)
      )
      .force(
        "charge",
        d3.forceManyBody().strength(options.chargeStrength ?? -140)
      )
      .force("center", d3.forceCenter(width / 2, height / 2));

    this.update();

    if (options.settleTicks !== undefined) {
      this.simulation.stop();
      this.simulation.tick(options.settleTicks);
      this.applyPositions();
    } else {
      this.simulation.on("tick", () => this.applyPositions());
    }
  }

  /** Node and link data currently in the scene (full graph or focus). */
  private visible(): { nodes: SimNode[]; links: SimLink[] } {
    if (this.selectedId === null) {
      return { nodes: this.simNodes, links: this.simLinks };
    }
    const subset = focusSubset(this.doc, this.selectedId);
    if (subset === null) {
      return { nodes: this.simNodes, links: this.simLinks };
    }
    return {
      nodes: this.simNodes.filter((n) => subset.nodeIds.has(n.id)),
      links: this.simLinks.filter((l) => subset.linkKeys.has(l.key)),
    };
  }

  private update(): void {
    const { nodes, links } = this.visible();

    this.linkGroup
      .selectAll<SVGLineElement, SimLink>("line")
      .data(links, (d) => d.key)
      .join("line")
      .attr("class", "link")
      .attr("stroke", "#9aa7b1")
      .attr("stroke-width", (d) => Math.max(EDGE_RENDER_FLOOR, d.doc.thickness))
      .attr("data-weight", (d) => d.doc.weight)
      .attr("data-source", (d) => d.doc.source)
      .attr("data-target", (d) => d.doc.target)
      .on("mouseover", (_event, d) => this.showTooltip(edgeTooltipHtml(this.doc, d.doc)))
      .on("mouseout", () => this.hideTooltip());

    this.nodeGroup
      .selectAll<SVGCircleElement, SimNode>("circle")
      .data(nodes, (d) => d.id)
      .join("circle")
      .attr("class", (d) => `node ${d.type}`)
      .attr("r", (d) => d.radius)
      .attr("fill", (d) => (d.type === "medication" ? "#e4572e" : "#2e86ab"))
      .attr("data-id", (d) => d.id)
      .attr("data-frequency", (d) => d.frequency)
      .on("click", (_event, d) => {
        if (d.type === "side_effect") this.focus(d.id);
      })
      .on("mouseover", (_event, d) => {
        const node = this.doc.nodes.find((n) => n.id === d.id);
        if (node) this.showTooltip(nodeTooltipHtml(this.doc, node));
      })
      .on("mouseout", () => this.hideTooltip());

    this.labelGroup
      .selectAll<SVGTextElement, SimNode>("text")
      .data(nodes, (d) => d.id)
      .join("text")
      .attr("class", "label")
      .attr("font-size", 11)
      .text((d) => d.label);

    this.applyPositions();
  }

  private applyPositions(): void {
    this.linkGroup
      .selectAll<SVGLineElement, SimLink>("line")
      .attr("x1", (d) => (d.source as SimNode).x ?? 0)
      .attr("y1", (d) => (d.source as SimNode).y ?? 0)
      .attr("x2", (d) => (d.target as SimNode).x ?? 0)
      .attr("y2", (d) => (d.target as SimNode).y ?? 0);
    this.nodeGroup
      .selectAll<SVGCircleElement, SimNode>("circle")
      .attr("cx", (d) => d.x ?? 0)
      .attr("cy", (d) => d.y ?? 0);
    this.labelGroup
      .selectAll<SVGTextElement, SimNode>("text")
      .attr("x", (d) => (d.x ?? 0) + d.radius + 2)
      .attr("y", (d) => (d.y ?? 0) + 3);
  }

  /** Reduce the scene to one side-effect node and its incident edges. */
  focus(sideEffectId: string): void {
    if (focusSubset(this.doc, sideEffectId) === null) {
      console.warn(`focus ignored: ${sideEffectId} is not a side-effect node`);
      return;
    }
    this.selectedId = sideEffectId;
    this.clearButton.style.display = "";
    this.update();
  }

  clearFocus(): void {
    this.selectedId = null;
    this.clearButton.style.display = "none";
    this.update();
  }

  get selected(): string | null {
    return this.selectedId;
  }

  private showTooltip(html: string): void {
    this.tooltip.innerHTML = html;
    this.tooltip.style.display = "";
  }

  private hideTooltip(): void {
    this.tooltip.style.display = "none";
  }

  dispose(): void {
    this.simulation.stop();
  }
}

/** Replace the container's contents with a visible error banner. */
export function renderError(container: HTMLElement, message: string): void {
  container.replaceChildren();
  const banner = container.ownerDocument.createElement("div");
  banner.className = "error-banner";
  banner.textContent = `cannot render document: ${message}`;
  container.appendChild(banner);
}
