import { ApiClient } from "./api.js";
import { ShopController } from "./app.js";
import { mount } from "./render.js";

const base = (window as { UNDR_API_BASE?: string }).UNDR_API_BASE ?? "";
const controller = new ShopController(new ApiClient(base));
mount(document.getElementById("app")!, controller);
void controller.init();
