/** Framework-free DOM wiring for the self-annotation page.
 *
 * Two views: a login form, and the member's personal skill page with one
 * slider per extracted term. All user data (terms come from the server,
 * but the server stores whatever the chat logs contained) is written with
 * textContent, never innerHTML.
 */

import { ApiClient, ApiError } from "./api.js";
import {
  NEUTRAL_SLIDER_POSITION,
  SCORE_MAX,
  SCORE_MIN,
  SCORE_STEP,
  SkillRow,
  applySaved,
  formatScore,
  hasDirty,
  markRejected,
  setScore,
  termFromErrorMessage,
  toPayload,
  toRows,
} from "./model.js";

type BannerKind = "info" | "success" | "error";

interface AppState {
  view: "login" | "skills";
  userId: string | null;
  rows: SkillRow[];
  banner: { kind: BannerKind; text: string } | null;
  busy: boolean;
}

export function mountApp(root: HTMLElement, client: ApiClient): void {
  const state: AppState = {
    view: "login",
    userId: null,
    rows: [],
    banner: null,
    busy: false,
  };

  function showBanner(kind: BannerKind, text: string): void {
    state.banner = { kind, text };
    renderBanner();
  }

  function clearBanner(): void {
    state.banner = null;
    renderBanner();
  }

  function renderBanner(): void {
    const el = root.querySelector<HTMLElement>("#banner");
    if (el === null) {
      return;
    }
    if (state.banner === null) {
      el.hidden = true;
      el.textContent = "";
      el.className = "banner";
    } else {
      el.hidden = false;
      el.textContent = state.banner.text;
      el.className = `banner ${state.banner.kind}`;
    }
  }

  function sessionLost(): void {
    client.logout();
    state.view = "login";
    state.userId = null;
    state.rows = [];
    state.banner = { kind: "error", text: "session expired — log in again" };
    render();
  }

  // ------------------------------------------------------------------ login

  function renderLogin(): void {
    root.innerHTML = `
      <section id="login-view">
        <h1>skillmap — self-annotation</h1>
        <p class="lede">Rate your own familiarity with the skills extracted
        from your messages. Your answers are the reference data; nothing is
        pre-filled for you.</p>
        <div id="banner" class="banner" role="alert" hidden></div>
        <form id="login-form">
          <label for="email">Email</label>
          <input id="email" name="email" type="email" autocomplete="username" required />
          <label for="password">Password</label>
          <input id="password" name="password" type="password" autocomplete="current-password" required />
          <button id="login-btn" type="submit">Log in</button>
        </form>
      </section>
    `;
    renderBanner();
    const form = root.querySelector<HTMLFormElement>("#login-form");
    form?.addEventListener("submit", (event) => {
      event.preventDefault();
      void handleLogin();
    });
  }

  async function handleLogin(): Promise<void> {
    if (state.busy) {
      return;
    }
    const email = root.querySelector<HTMLInputElement>("#email")?.value ?? "";
    const password = root.querySelector<HTMLInputElement>("#password")?.value ?? "";
    state.busy = true;
    try {
      const session = await client.login(email, password);
      state.userId = session.user_id;
      const wire = await client.getSkills(session.user_id);
      state.rows = toRows(wire);
      state.view = "skills";
      state.banner = null;
      render();
    } catch (error) {
      if (error instanceof ApiError && error.status === 401) {
        // One fixed string for every auth failure: no enumeration hints.
        showBanner("error", "invalid email or password");
      } else if (error instanceof ApiError) {
        showBanner("error", `login failed — ${error.message}`);
      } else {
        showBanner("error", "network error — try again");
      }
    } finally {
      state.busy = false;
    }
  }

  // ----------------------------------------------------------------- skills

  function renderSkills(): void {
    root.innerHTML = `
      <section id="skills-view">
        <header>
          <h1>Your skills</h1>
          <span class="whoami"></span>
        </header>
        <p class="lede">Move a slider to rate a skill from 0 (unknown) to
        100 (expert), in steps of 5. Untouched skills stay unrated.</p>
        <div id="banner" class="banner" role="alert" hidden></div>
        <ul id="skill-list"></ul>
        <button id="submit-btn" type="button" disabled>Save ratings</button>
      </section>
    `;
    const whoami = root.querySelector<HTMLElement>(".whoami");
    if (whoami !== null) {
      whoami.textContent = state.userId ?? "";
    }
    const list = root.querySelector<HTMLUListElement>("#skill-list");
    if (list !== null) {
      for (const row of state.rows) {
        list.appendChild(buildRowEl(row));
      }
    }
    renderBanner();
    updateSubmitButton();
    root.querySelector<HTMLButtonElement>("#submit-btn")?.addEventListener("click", () => {
      void handleSubmit();
    });
  }

  function buildRowEl(row: SkillRow): HTMLLIElement {
    const li = document.createElement("li");
    li.className = "skill-row";
    li.dataset["term"] = row.term;

    const label = document.createElement("span");
    label.className = "term-label";
    label.textContent = row.displayTerm;

    const slider = document.createElement("input");
    slider.type = "range";
    slider.className = "score-slider";
    slider.min = String(SCORE_MIN);
    slider.max = String(SCORE_MAX);
    slider.step = String(SCORE_STEP);
    slider.addEventListener("input", () => {
      state.rows = setScore(state.rows, row.term, Number(slider.value));
      patchRows();
    });

    const value = document.createElement("span");
    value.className = "score-value";

    li.append(label, slider, value);
    updateRowEl(li, row);
    return li;
  }

  function updateRowEl(li: HTMLLIElement, row: SkillRow): void {
    li.classList.toggle("unrated", row.pendingScore === null);
    li.classList.toggle("dirty", row.dirty);
    li.classList.toggle("invalid", row.invalid);
    const slider = li.querySelector<HTMLInputElement>(".score-slider");
    if (slider !== null) {
      // Unrated rows park the thumb mid-track as a neutral resting state;
      // the row submits nothing until the member actually moves it.
      slider.value = String(row.pendingScore ?? NEUTRAL_SLIDER_POSITION);
      slider.setAttribute("aria-valuetext", formatScore(row.pendingScore));
    }
    const value = li.querySelector<HTMLElement>(".score-value");
    if (value !== null) {
      value.textContent = formatScore(row.pendingScore);
    }
  }

  function patchRows(): void {
    const byTerm = new Map(state.rows.map((row) => [row.term, row]));
    for (const li of root.querySelectorAll<HTMLLIElement>("li.skill-row")) {
      const row = byTerm.get(li.dataset["term"] ?? "");
      if (row !== undefined) {
        updateRowEl(li, row);
      }
    }
    updateSubmitButton();
  }

  function updateSubmitButton(): void {
    const button = root.querySelector<HTMLButtonElement>("#submit-btn");
    if (button !== null) {
      button.disabled = state.busy || !hasDirty(state.rows);
    }
  }

  async function handleSubmit(): Promise<void> {
    if (state.busy || state.userId === null) {
      return;
    }
    const payload = toPayload(state.rows);
    if (payload.length === 0) {
      return;
    }
    state.busy = true;
    updateSubmitButton();
    try {
      const result = await client.submitRatings(state.userId, payload);
      state.rows = applySaved(
        state.rows,
        payload.map((rating) => rating.term),
      );
      showBanner("success", `saved ${result.accepted} rating${result.accepted === 1 ? "" : "s"}`);
    } catch (error) {
      if (error instanceof ApiError && error.sessionExpired) {
        state.busy = false;
        sessionLost();
        return;
      }
      if (error instanceof ApiError && error.status === 422) {
        // The batch is atomic server-side: nothing was saved. Flag what we
        // can pin down, or every pending row when the message names none.
        const term = termFromErrorMessage(error.message);
        state.rows = markRejected(state.rows, term === null ? [] : [term]);
        showBanner("error", `not saved: ${error.message}`);
      } else if (error instanceof ApiError) {
        showBanner("error", `not saved: ${error.message}`);
      } else {
        showBanner(
          "error",
          "network error — nothing was saved; your ratings are kept, submit again to retry",
        );
      }
    } finally {
      state.busy = false;
      patchRows();
    }
  }

  // ------------------------------------------------------------------ mount

  function render(): void {
    if (state.view === "login") {
      renderLogin();
    } else {
      renderSkills();
    }
  }

  render();
}
