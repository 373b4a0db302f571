import type { Profile } from "../state";

export interface ProfilePanel {
  root: HTMLElement;
}

export function renderProfilePanel(
  container: HTMLElement,
  current: Profile | null,
  onComplete: (profile: Profile) => void,
): ProfilePanel {
  container.innerHTML = "";
  const root = document.createElement("form");
  root.className = "panel panel-profile";
  root.innerHTML = `
    <h2>Health profile</h2>
    <p class="panel-lead">Who is this health story about?</p>
    <label>Name
      <input name="name" type="text" required autocomplete="name" />
    </label>
    <label>Date of birth <span class="muted">(lets the timeline show ages)</span>
      <input name="dateOfBirth" type="date" />
    </label>
    <p class="field-error" data-role="profile-error" hidden></p>
    <button type="submit">Continue to your story</button>
  `;
  const nameInput = root.querySelector<HTMLInputElement>('input[name="name"]')!;
  const dobInput = root.querySelector<HTMLInputElement>(
    'input[name="dateOfBirth"]',
  )!;
  const error = root.querySelector<HTMLElement>('[data-role="profile-error"]')!;
  if (current) {
    nameInput.value = current.name;
    dobInput.value = current.dateOfBirth ?? "";
  }
  root.addEventListener("submit", (event) => {
    event.preventDefault();
    const name = nameInput.value.trim();
    if (!name) {
      error.textContent = "A name is required.";
      error.hidden = false;
      return;
    }
    error.hidden = true;
    onComplete({ name, dateOfBirth: dobInput.value || null });
  });
  container.appendChild(root);
  return { root };
}
