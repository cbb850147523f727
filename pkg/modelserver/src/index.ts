import { readFileSync } from 'node:fs'
import { dirname, join } from 'node:path'
import { fileURLToPath } from 'node:url'
import { parseArgs } from 'node:util'

import { createApp } from './server.js'
import { ScriptWorld, StubEmbedder, type EmbeddingsTable } from './stub.js'

const packageRoot = join(dirname(fileURLToPath(import.meta.url)), '..')

const { values } = parseArgs({
  options: {
    port: { type: 'string', default: '8711' },
    world: { type: 'string', default: join(packageRoot, 'fixtures', 'world.jsonl') },
    embeddings: { type: 'string', default: join(packageRoot, 'fixtures', 'embeddings.json') },
    token: { type: 'string' },
  },
})

const port = Number(values.port)
if (!Number.isInteger(port) || port < 1 || port > 65535) {
  console.error(`invalid port: ${values.port}`)
  process.exit(2)
}

const world = ScriptWorld.fromJsonl(readFileSync(values.world!, 'utf-8'))
const embeddings = JSON.parse(readFileSync(values.embeddings!, 'utf-8')) as EmbeddingsTable
const app = createApp({ world, embedder: new StubEmbedder(embeddings), token: values.token })

app.listen(port, () => {
  console.log(`model server listening on :${port} (world=${values.world})`)
})
