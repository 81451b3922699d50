// Utterance builders: the client talks to the server in the same command
// grammar a terminal user types, nothing more.

export function replaceUtterance(ordinal: number, text: string): string {
  return `Replace Step ${ordinal} with: ${text}`;
}

export function deleteUtterance(ordinal: number): string {
  return `Delete step ${ordinal}`;
}

export function mergeUtterance(first: number, second: number): string {
  return `Merge steps ${first} and ${second}`;
}

export function insertUtterance(after: number, text: string): string {
  return after === 0 ? `Insert at start: ${text}` : `Insert after step ${after}: ${text}`;
}

export function biasUtterance(ordinal: number): string {
  return `Is there any bias in Step ${ordinal}?`;
}

export const CONFIRM_UTTERANCE = "Looks good. Proceed to final answer.";
export const OVERRIDE_UTTERANCE = "override";
export const FORWARD_UTTERANCE = "forward";

const PII_LABELS: Record<string, string> = {
  Email: "email address",
  PhoneNumber: "phone number",
  NationalId: "national id number",
  PaymentCard: "payment card number",
};

export function piiWarningLine(kind: string, preview: string, where: string): string {
  const label = PII_LABELS[kind] ?? kind;
  return `Warning: possible ${label} detected in ${where} (${preview}).`;
}
