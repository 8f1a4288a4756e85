/**
 * Run the scripted walkthrough against an already-running server:
 *
 *   elicit serve --port 8781          # in another terminal
 *   npm run walkthrough [-- http://127.0.0.1:8781]
 */

import { runWalkthrough } from "./walkthrough.js";

const base = process.argv[2] ?? "http://127.0.0.1:8781";

runWalkthrough(base)
  .then((result) => {
    console.log(`session ${result.sessionId}`);
    console.log(`beta anchor parameters: ${result.betaParams.map((p) => p.toFixed(3)).join(", ")}`);
    for (const e of result.exploredSummaries) {
      console.log(
        `explored c=${e.concordance}: empirical ${e.empirical.toFixed(3)} (seed ${e.seed})`,
      );
    }
    console.log(`events appended by exploration: ${result.exploreEventDelta}`);
    console.log(`copula events committed: ${result.copulaEventCount}`);
  })
  .catch((err) => {
    console.error(err);
    process.exit(1);
  });
