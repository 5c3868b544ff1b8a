export function showBanner(
  host: HTMLElement,
  message: string,
  kind: "error" | "info" = "error",
): void {
  clearBanner(host);
  const el = document.createElement("div");
  el.className = `banner ${kind}`;
  el.setAttribute("role", "alert");
  el.textContent = message;
  host.prepend(el);
}

export function clearBanner(host: HTMLElement): void {
  host.querySelectorAll(":scope > .banner").forEach((b) => b.remove());
}
