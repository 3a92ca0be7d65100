/** Entry point: mount the app on the page served by the API process.
 *
 * The UI is served same-origin by the annotation service (its static
 * mount), so the client needs no base URL configuration here.
 */

import { ApiClient } from "./api.js";
import { mountApp } from "./app.js";

const root = document.getElementById("app");
if (root !== null) {
  mountApp(root, new ApiClient());
}
