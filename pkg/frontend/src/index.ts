export { GatewayClient, GatewayError, parseEventStream } from "./client.js";
export {
  addEcho,
  applyEntries,
  applyEntry,
  applySnapshot,
  initialState,
  overBudget,
  streamTail,
  streams,
} from "./model.js";
export { ConsoleApp, mountConsole } from "./console.js";
export { driveScript, DriverError } from "./driver.js";
export {
  escapeHtml,
  payloadKind,
  renderBudgetConfirm,
  renderForm,
  renderList,
  renderMessage,
  renderPlan,
  renderTable,
  renderText,
} from "./render.js";
export * from "./types.js";
