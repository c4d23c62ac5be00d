// Browser bootstrap: mount the app against the page shell in index.html.

import { CuratorApp } from "./app.js";

function required(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`index.html is missing #${id}`);
  return el;
}

const app = new CuratorApp(
  {
    graph: required("graph"),
    inspector: required("inspector"),
    console: required("console"),
    redPen: required("red-pen"),
    banner: required("banner"),
    rescan: document.getElementById("rescan") ?? undefined,
  },
  window.location.origin.replace(/\/$/, ""),
);

void app.refresh();

// handy for the browser devtools
(window as unknown as { curator: CuratorApp }).curator = app;
