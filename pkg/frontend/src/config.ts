/** App configuration, loaded from a single JSON document. */

export interface AppConfig {
  apiBase: string;
  user: string;
  token: string;
}

export class ConfigError extends Error {}

export function loadConfig(raw: unknown): AppConfig {
  if (typeof raw !== "object" || raw === null) {
    throw new ConfigError("config must be a JSON object");
  }
  const doc = raw as Record<string, unknown>;
  for (const field of ["apiBase", "user", "token"] as const) {
    if (typeof doc[field] !== "string" || doc[field] === "") {
      throw new ConfigError(`config field ${field} must be a non-empty string`);
    }
  }
  return {
    apiBase: (doc.apiBase as string).replace(/\/+$/, ""),
    user: doc.user as string,
    token: doc.token as string,
  };
}
