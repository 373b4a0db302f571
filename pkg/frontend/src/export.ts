// Artifact export: hands the browser exactly the bytes the service
// served, so a saved file equals `GET /stories/{id}/artifact.svg`.

export function exportArtifact(svgText: string, filename: string): void {
  const blob = new Blob([svgText], { type: "image/svg+xml" });
  const url = URL.createObjectURL(blob);
  const anchor = document.createElement("a");
  anchor.href = url;
  anchor.download = filename;
  document.body.appendChild(anchor);
  anchor.click();
  anchor.remove();
  URL.revokeObjectURL(url);
}
