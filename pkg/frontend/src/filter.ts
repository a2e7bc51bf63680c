/** Instance filtering: dot-separated variable assignments like "X=5.Y=3". */

import { Bindings, InstanceInfo } from "./protocol.js";

export function parseFilter(text: string): Bindings {
  const bindings: Bindings = {};
  for (const piece of text.split(".")) {
    const trimmed = piece.trim();
    if (!trimmed) {
      continue;
    }
    const eq = trimmed.indexOf("=");
    if (eq < 0) {
      throw new Error(`bad filter component ${JSON.stringify(trimmed)}; expected VAR=term`);
    }
    const variable = trimmed.slice(0, eq).trim();
    const value = trimmed.slice(eq + 1).trim();
    bindings[variable] = /^-?\d+$/.test(value) ? Number(value) : value;
  }
  return bindings;
}

export function matchesFilter(instance: InstanceInfo, bindings: Bindings): boolean {
  const wanted = Object.entries(bindings);
  if (wanted.length === 0) {
    return true;
  }
  return instance.substs.some((subst) =>
    wanted.every(([variable, value]) => subst[variable] === value),
  );
}

export function filterInstances(
  instances: InstanceInfo[],
  filterText: string,
): InstanceInfo[] {
  const bindings = parseFilter(filterText);
  return instances.filter((instance) => matchesFilter(instance, bindings));
}
