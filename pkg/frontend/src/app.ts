// Application wiring: one state loop of service snapshot -> view model ->
// render, with the console and Red Pen feeding back into refresh().

import {
  PkgraphClient,
  ServiceError,
  type DeletionReceiptData,
  type NodeDetailResponse,
  type QueryResponse,
} from "./api.js";
import { GraphView } from "./graphView.js";
import { InspectorPanel } from "./inspector.js";
import { buildViewModel, type Overlays } from "./model.js";
import { QueryConsole } from "./console.js";
import { RedPenController } from "./redPen.js";

export interface AppElements {
  graph: HTMLElement;
  inspector: HTMLElement;
  console: HTMLElement;
  redPen: HTMLElement;
  banner: HTMLElement;
  rescan?: HTMLElement;
}

export class CuratorApp {
  readonly client: PkgraphClient;
  readonly graphView: GraphView;
  readonly inspector: InspectorPanel;
  readonly console: QueryConsole;
  readonly redPen: RedPenController;

  private overlays: Overlays = {};
  lastQuery: QueryResponse | null = null;

  constructor(
    private readonly elements: AppElements,
    baseUrl: string,
    fetchImpl?: typeof fetch,
  ) {
    this.client = new PkgraphClient(baseUrl, fetchImpl);
    this.graphView = new GraphView(elements.graph, {
      onNodeClick: (node) => void this.select(node.id),
    });
    this.inspector = new InspectorPanel(elements.inspector, (detail) =>
      this.redPen.request(detail),
    );
    this.console = new QueryConsole(elements.console, {
      onSubmit: (question, hops, anchors) =>
        void this.ask(question, hops, anchors),
    });
    this.redPen = new RedPenController(
      this.client,
      elements.redPen,
      (receipt) => void this.afterDeletion(receipt),
      (message) => this.showBanner(message),
    );
    if (elements.rescan) {
      elements.rescan.addEventListener("click", () => {
        const path = elements.rescan!.getAttribute("data-path");
        if (path) void this.rescan(path);
      });
    }
  }

  showBanner(message: string): void {
    this.elements.banner.textContent = message;
    this.elements.banner.setAttribute("data-visible", message ? "yes" : "no");
  }

  async refresh(): Promise<void> {
    try {
      const [graph, communities] = await Promise.all([
        this.client.graph(),
        this.client.communities(0),
      ]);
      const model = buildViewModel(graph, communities.partitions, this.overlays);
      this.graphView.render(model);
      this.showBanner("");
    } catch (err) {
      if (err instanceof ServiceError && err.status === 0) {
        this.showBanner("service unreachable — is pkgraph serve running?");
      } else {
        this.showBanner(err instanceof Error ? err.message : String(err));
      }
    }
  }

  async select(nodeId: string): Promise<void> {
    try {
      const detail = await this.client.node(nodeId);
      this.overlays.selection = nodeId;
      this.inspector.render(detail);
      await this.refresh();
    } catch (err) {
      this.showBanner(err instanceof Error ? err.message : String(err));
    }
  }

  async ask(question: string, nHops = 2, kAnchors = 5): Promise<void> {
    try {
      const result = await this.client.query(question, {
        n_hops: nHops,
        k_anchors: kAnchors,
      });
      this.lastQuery = result;
      this.console.renderResult(result);
      this.overlays.highlighted = new Set(result.answer.citations);
      this.overlays.hopBadges = new Map(
        Object.entries(result.subgraph.hops).map(([id, hop]) => [id, hop]),
      );
      await this.refresh();
    } catch (err) {
      this.console.renderError(err instanceof Error ? err.message : String(err));
    }
  }

  private async afterDeletion(receipt: DeletionReceiptData): Promise<void> {
    const gone = new Set(receipt.deleted_nodes);
    if (this.overlays.selection && gone.has(this.overlays.selection)) {
      this.overlays.selection = null;
      this.inspector.clear();
    }
    if (this.overlays.highlighted) {
      for (const id of gone) this.overlays.highlighted.delete(id);
    }
    await this.refresh();
  }

  async rescan(path: string): Promise<void> {
    try {
      await this.client.ingestPath(path);
      await this.refresh();
    } catch (err) {
      this.showBanner(err instanceof Error ? err.message : String(err));
    }
  }

  nodeDetail(id: string): Promise<NodeDetailResponse> {
    return this.client.node(id);
  }
}
