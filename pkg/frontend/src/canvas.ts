// Canvas pane: shows the server-rendered SVG verbatim and resolves
// clicks back to event ids through the stable `event-<id>` group ids.

export function showArtifact(container: HTMLElement, svgText: string): void {
  container.innerHTML = svgText;
  const svg = container.querySelector("svg");
  if (svg) {
    svg.removeAttribute("height");
    svg.style.width = "100%";
    svg.style.height = "auto";
  }
}

export function clearArtifact(container: HTMLElement, message: string): void {
  container.innerHTML = "";
  const hint = document.createElement("p");
  hint.className = "canvas-hint";
  hint.textContent = message;
  container.appendChild(hint);
}

export function eventIdsInArtifact(container: HTMLElement): string[] {
  return Array.from(container.querySelectorAll('g[id^="event-"]')).map((g) =>
    g.id.slice("event-".length),
  );
}

export function wireHitTesting(
  container: HTMLElement,
  onEvent: (eventId: string) => void,
): void {
  container.addEventListener("click", (raw) => {
    const target = raw.target;
    if (!(target instanceof Element)) return;
    const group = target.closest('g[id^="event-"]');
    if (group) onEvent(group.id.slice("event-".length));
  });
}
