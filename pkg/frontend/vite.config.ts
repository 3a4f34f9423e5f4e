import { defineConfig } from "vitest/config";

export default defineConfig({
  server: {
    port: 5173,
    proxy: {
      // annotation service (narevents serve)
      "/sessions": "http://127.0.0.1:8787",
      "/batches": "http://127.0.0.1:8787",
      "/gold": "http://127.0.0.1:8787",
      "/export": "http://127.0.0.1:8787"
    }
  },
  test: {
    environment: "jsdom",
    testTimeout: 30000,
    hookTimeout: 60000
  }
});
