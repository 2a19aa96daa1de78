/** Shared wire types mirroring the HTTP API schema (version 1). */

export interface Token {
  surface: string;
  start: number;
  end: number;
}

export type EntityLabel = "ASP" | "OPI";

export interface Entity {
  start: number;
  end: number;
  label: EntityLabel;
}

export interface Relation {
  head: number;
  tail: number;
  label: "ASP-OPI";
}

export interface AnnotationPayload {
  entities: Entity[];
  relations: Relation[];
}

export interface DocumentDetail {
  id: string;
  text: string;
  tokens: Token[];
  annotations: (AnnotationPayload & { id: string; text: string }) | null;
  revision: string;
}

export interface DocumentSummary {
  id: string;
  annotated: boolean;
  preview: string;
}

export interface MentionOut {
  token_start: number;
  token_end: number;
  start: number;
  end: number;
  text: string;
  label: EntityLabel;
  confidence?: number;
}

export interface RelationOut {
  head: MentionOut;
  tail: MentionOut;
  label: string;
  probability: number;
}

export interface QueueEntry {
  doc_id: string;
  text: string;
  annotation: AnnotationPayload & { id: string; text: string };
  mention_confidences: number[];
  relation_probabilities: number[];
  mean_confidence: number;
}

export interface CurvePoint {
  epoch: number;
  train_loss: number;
  val_loss: number;
  precision: number;
  recall: number;
  f1: number;
}
