// Shapes exchanged with the gateway JSON API.

export type Role = 'Member' | 'Supervisor' | 'Consumer';

/** The console's only persistent state: who is logged in, if anyone. */
export interface SessionView {
  token: string;
  user: string;
  org: string;
  role: Role;
}

export const ANONYMOUS: SessionView = {
  token: '',
  user: '',
  org: '',
  role: 'Consumer',
};

export interface GatewayError {
  code: string;
  message: string;
  step?: string;
}

export interface HopPrivate {
  cert: string;
  token: string;
  outbound_tx: string;
  inbound_tx: string;
}

export interface Hop {
  batch: string;
  seq: number;
  from: string;
  to: string;
  qty: number;
  time: number;
  private?: HopPrivate;
}

export interface Qualification {
  qual: string;
  owner: string;
  status: 'Submitted' | 'Approved' | 'Rejected';
  decided_by: string | null;
}

export interface StockCell {
  batch: string;
  org: string;
  status: 'InStock' | 'InTransit' | 'Delivered';
  qty: number;
}

export interface OutboundReceipt {
  token: string;
  batch: string;
  from: string;
  to: string;
  qty: number;
  outbound_tx: string;
}

export interface ScanResult {
  batch: string;
  inbound_tx: string;
  outbound_tx: string;
}

export interface AuditEntry {
  seq: number;
  source_context: string;
  actor: string;
  action: string;
  subject: string;
  logical_time: number;
}
