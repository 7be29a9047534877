import { fetchDocument } from "./document";
import { GraphView, renderError } from "./render";

async function boot(): Promise<void> {
  const container = document.getElementById("app");
  if (!container) return;
  const params = new URLSearchParams(window.location.search);
  const docUrl = params.get("doc") ?? "graph.json";
  try {
    const doc = await fetchDocument(docUrl);
    new GraphView(container, doc, {
      width: container.clientWidth || 960,
      height: Math.max(480, window.innerHeight - 60),
    });
  } catch (err) {
    renderError(container, err instanceof Error ? err.message : String(err));
  }
}

void boot();
