// Query console: question box, hop and anchor controls, answer rendering.
// Refusals render distinctly and evidence-first: the (empty) retrieved
// context is shown rather than a bare error.

import type { QueryResponse } from "./api.js";

export interface ConsoleCallbacks {
  onSubmit: (question: string, nHops: number, kAnchors: number) => void;
}

export class QueryConsole {
  private questionInput!: HTMLInputElement;
  private hopsInput!: HTMLInputElement;
  private anchorsInput!: HTMLInputElement;
  private resultBox!: HTMLElement;

  constructor(
    private readonly container: HTMLElement,
    private readonly callbacks: ConsoleCallbacks,
  ) {
    this.build();
  }

  private build(): void {
    const doc = this.container.ownerDocument;
    this.container.innerHTML = "";

    const form = doc.createElement("div");
    form.setAttribute("class", "console-form");

    this.questionInput = doc.createElement("input");
    this.questionInput.setAttribute("type", "text");
    this.questionInput.setAttribute("class", "question-input");
    this.questionInput.setAttribute("placeholder", "Ask about your memories…");
    form.appendChild(this.questionInput);

    this.hopsInput = doc.createElement("input");
    this.hopsInput.setAttribute("type", "range");
    this.hopsInput.setAttribute("min", "0");
    this.hopsInput.setAttribute("max", "4");
    this.hopsInput.setAttribute("class", "hops-slider");
    this.hopsInput.value = "2";
    form.appendChild(this.hopsInput);

    this.anchorsInput = doc.createElement("input");
    this.anchorsInput.setAttribute("type", "number");
    this.anchorsInput.setAttribute("min", "1");
    this.anchorsInput.setAttribute("class", "anchors-input");
    this.anchorsInput.value = "5";
    form.appendChild(this.anchorsInput);

    const submit = doc.createElement("button");
    submit.setAttribute("class", "ask-button");
    submit.textContent = "Ask";
    submit.addEventListener("click", () => this.submit());
    form.appendChild(submit);

    this.resultBox = doc.createElement("div");
    this.resultBox.setAttribute("class", "console-result");

    this.container.appendChild(form);
    this.container.appendChild(this.resultBox);
  }

  submit(): void {
    const question = this.questionInput.value.trim();
    if (!question) return;
    this.callbacks.onSubmit(
      question,
      Number(this.hopsInput.value),
      Number(this.anchorsInput.value),
    );
  }

  setQuestion(question: string, nHops?: number): void {
    this.questionInput.value = question;
    if (nHops !== undefined) this.hopsInput.value = String(nHops);
  }

  renderResult(result: QueryResponse): void {
    const doc = this.container.ownerDocument;
    this.resultBox.innerHTML = "";

    const answer = doc.createElement("p");
    answer.setAttribute(
      "class",
      result.answer.refused ? "answer refused" : "answer grounded",
    );
    answer.textContent = result.answer.text;
    this.resultBox.appendChild(answer);

    const citations = doc.createElement("ul");
    citations.setAttribute("class", "citations");
    for (const id of result.answer.citations) {
      const node = result.subgraph.nodes.find((n) => n.id === id);
      const li = doc.createElement("li");
      li.setAttribute("data-citation", id);
      li.textContent = node ? node.display_name : id;
      citations.appendChild(li);
    }
    this.resultBox.appendChild(citations);

    // glass box: show exactly what was retrieved, even (especially) nothing
    const context = doc.createElement("pre");
    context.setAttribute("class", "retrieved-context");
    context.setAttribute("data-empty", result.subgraph.context ? "no" : "yes");
    context.textContent = result.subgraph.context;
    this.resultBox.appendChild(context);

    const timing = doc.createElement("small");
    timing.setAttribute("class", "timing");
    timing.textContent =
      `retrieval ${result.retrieval_ms.toFixed(1)} ms, ` +
      `generation ${result.generation_ms.toFixed(1)} ms`;
    this.resultBox.appendChild(timing);
  }

  renderError(message: string): void {
    this.resultBox.innerHTML = "";
    const p = this.container.ownerDocument.createElement("p");
    p.setAttribute("class", "answer error");
    p.textContent = message;
    this.resultBox.appendChild(p);
  }
}
