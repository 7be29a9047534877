// Shapes of the exported graph document. The viewer reads every number
// it displays from this document and recomputes nothing.

export interface DocNode {
  id: string;
  type: "medication" | "side_effect";
  label: string;
  frequency: number;
  radius: number;
}

export interface DocExample {
  description: string;
  source_id: string;
}

export interface DocLink {
  source: string;
  target: string;
  weight: number;
  thickness: number;
  severity: Record<string, number>;
  duration: Record<string, number>;
  dosage: Record<string, number>;
  examples: DocExample[];
}

export interface DocMetadata {
  medication_count: number;
  side_effect_count: number;
  link_count: number;
  relation_count: number;
  params: { base_size: number; base_thickness: number; log_base: string };
  corpus_window: { start: number; end: number } | null;
}

export interface GraphDocument {
  metadata: DocMetadata;
  nodes: DocNode[];
  links: DocLink[];
}

export class SchemaError extends Error {}
