// Elicitation panel: example stories appear above the input so people
// see what a health story can look like before writing their own.

const EXAMPLE_STORIES = [
  "I was diagnosed with asthma in 2003 and started using an inhaler in " +
    "March 2004. As a child I had constant ear infections.",
  "My back pain started in 2018 and is still ongoing. I did physiotherapy " +
    "from 2019 to 2021, and in June 2021 an X-ray came back clear. We moved " +
    "to Denver in 2020.",
];

export interface ElicitationPanel {
  root: HTMLElement;
  getText(): string;
  setError(message: string | null): void;
  setBusy(busy: boolean): void;
}

export function renderElicitationPanel(
  container: HTMLElement,
  initialText: string,
  onSubmit: (text: string) => void,
  onAddEvent: () => void,
  hasStory: boolean,
): ElicitationPanel {
  container.innerHTML = "";
  const root = document.createElement("section");
  root.className = "panel panel-elicitation";
  const examples = EXAMPLE_STORIES.map(
    (text) => `<blockquote class="example-story">${text}</blockquote>`,
  ).join("");
  root.innerHTML = `
    <h2>Your health story</h2>
    <details class="examples" open>
      <summary>Example health stories</summary>
      ${examples}
    </details>
    <p class="panel-lead">Tell your story in your own words. Mention when
    things happened if you can; anything undated still gets a place on the
    timeline.</p>
    <textarea name="narrative" rows="10"
      placeholder="I was diagnosed with..."></textarea>
    <p class="field-error" data-role="elicitation-error" hidden></p>
    <div class="panel-actions">
      <button type="button" data-role="submit-narrative">Build my timeline</button>
      <button type="button" data-role="add-event" hidden>Add an event</button>
    </div>
  `;
  const textarea = root.querySelector<HTMLTextAreaElement>("textarea")!;
  const error = root.querySelector<HTMLElement>(
    '[data-role="elicitation-error"]',
  )!;
  const submit = root.querySelector<HTMLButtonElement>(
    '[data-role="submit-narrative"]',
  )!;
  const add = root.querySelector<HTMLButtonElement>('[data-role="add-event"]')!;
  textarea.value = initialText;
  add.hidden = !hasStory;
  submit.addEventListener("click", () => onSubmit(textarea.value));
  add.addEventListener("click", () => onAddEvent());
  container.appendChild(root);
  return {
    root,
    getText: () => textarea.value,
    setError(message) {
      error.textContent = message ?? "";
      error.hidden = message === null;
    },
    setBusy(busy) {
      submit.disabled = busy;
      textarea.disabled = busy;
    },
  };
}
