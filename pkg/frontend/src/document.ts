import { DocLink, DocNode, GraphDocument, SchemaError } from "./types";

function isRecord(value: unknown): value is Record<string, unknown> {
  return typeof value === "object" && value !== null && !Array.isArray(value);
}

function isCountMap(value: unknown): value is Record<string, number> {
  return (
    isRecord(value) && Object.values(value).every((v) => typeof v === "number")
  );
}

function checkNode(raw: unknown, index: number): DocNode {
  if (!isRecord(raw)) throw new SchemaError(`node ${index} is not an object`);
  const { id, type, label, frequency, radius } = raw;
  if (typeof id !== "string" || typeof label !== "string")
    throw new SchemaError(`node ${index} lacks string id/label`);
  if (type !== "medication" && type !== "side_effect")
    throw new SchemaError(`node ${id} has unknown type ${String(type)}`);
  if (typeof frequency !== "number" || typeof radius !== "number")
    throw new SchemaError(`node ${id} lacks numeric frequency/radius`);
  return { id, type, label, frequency, radius };
}

function checkLink(raw: unknown, ids: Set<string>, index: number): DocLink {
  if (!isRecord(raw)) throw new SchemaError(`link ${index} is not an object`);
  const { source, target, weight, thickness, severity, duration, dosage, examples } =
    raw;
  if (typeof source !== "string" || typeof target !== "string")
    throw new SchemaError(`link ${index} lacks string endpoints`);
  if (!ids.has(source) || !ids.has(target))
    throw new SchemaError(`link ${source}->${target} references unknown nodes`);
  if (typeof weight !== "number" || typeof thickness !== "number")
    throw new SchemaError(`link ${source}->${target} lacks weight/thickness`);
  if (!isCountMap(severity) || !isCountMap(duration) || !isCountMap(dosage))
    throw new SchemaError(`link ${source}->${target} has malformed histograms`);
  if (
    !Array.isArray(examples) ||
    !examples.every(
      (e) =>
        isRecord(e) &&
        typeof e.description === "string" &&
        typeof e.source_id === "string"
    )
  )
    throw new SchemaError(`link ${source}->${target} has malformed examples`);
  return {
    source,
    target,
    weight,
    thickness,
    severity,
    duration,
    dosage,
    examples: examples as DocLink["examples"],
  };
}

/** Validate a parsed JSON payload against the document schema. */
export function validateDocument(raw: unknown): GraphDocument {
  if (!isRecord(raw)) throw new SchemaError("document is not an object");
  const { metadata, nodes, links } = raw;
  if (!isRecord(metadata) || !isRecord(metadata.params))
    throw new SchemaError("document lacks metadata.params");
  if (!Array.isArray(nodes) || !Array.isArray(links))
    throw new SchemaError("document lacks nodes/links arrays");
  const checkedNodes = nodes.map(checkNode);
  const ids = new Set(checkedNodes.map((n) => n.id));
  if (ids.size !== checkedNodes.length)
    throw new SchemaError("duplicate node ids in document");
  const checkedLinks = links.map((l, i) => checkLink(l, ids, i));
  return {
    metadata: metadata as unknown as GraphDocument["metadata"],
    nodes: checkedNodes,
    links: checkedLinks,
  };
}

export async function fetchDocument(url: string): Promise<GraphDocument> {
  const resp = await fetch(url);
  if (!resp.ok) throw new SchemaError(`failed to fetch ${url}: ${resp.status}`);
  return validateDocument(await resp.json());
}
