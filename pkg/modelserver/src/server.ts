import express, { type Express, type NextFunction, type Request, type Response } from 'express'

import { StubEmbedder, StubGenerator, ScriptWorld, UnscriptedPrefixError } from './stub.js'
import { generationRequestSchema, similarityRequestSchema } from './types.js'

export interface ServerConfig {
  world: ScriptWorld
  embedder: StubEmbedder
  token?: string
  generatorModelId?: string
  guideModelId?: string
}

export function createApp(config: ServerConfig): Express {
  const app = express()
  const generator = new StubGenerator(config.world)
  app.use(express.json({ limit: '2mb' }))

  app.use((req: Request, res: Response, next: NextFunction) => {
    if (!config.token || req.path === '/v1/health') return next()
    if (req.headers.authorization === `Bearer ${config.token}`) return next()
    res.status(401).json({ error_code: 'unauthorized', message: 'missing or wrong bearer token' })
  })

  app.get('/v1/health', (_req: Request, res: Response) => {
    res.json({
      status: 'ok',
      generator_model: config.generatorModelId ?? 'stub-script',
      guide_model: config.guideModelId ?? 'stub-embeddings',
    })
  })

  app.post('/v1/generate', (req: Request, res: Response) => {
    const parsed = generationRequestSchema.safeParse(req.body)
    if (!parsed.success) {
      res.status(400).json({ error_code: 'bad_request', message: parsed.error.message })
      return
    }
    try {
      res.json(generator.next(parsed.data))
    } catch (err) {
      if (err instanceof UnscriptedPrefixError) {
        res.status(404).json({ error_code: 'unscripted_prefix', message: err.message })
        return
      }
      throw err
    }
  })

  app.post('/v1/similarity', (req: Request, res: Response) => {
    const parsed = similarityRequestSchema.safeParse(req.body)
    if (!parsed.success) {
      res.status(400).json({ error_code: 'bad_request', message: parsed.error.message })
      return
    }
    const result = config.embedder.similarity(parsed.data.image.id, parsed.data.text)
    if (!result) {
      res.status(404).json({
        error_code: 'image_not_found',
        message: `no image registered under id ${parsed.data.image.id}`,
      })
      return
    }
    res.json(result.truncated ? { score: result.score, truncated: true } : { score: result.score })
  })

  app.use((_req: Request, res: Response) => {
    res.status(404).json({ error_code: 'not_found', message: 'unknown endpoint' })
  })

  app.use((err: Error, _req: Request, res: Response, _next: NextFunction) => {
    const parseFailure = (err as { type?: string }).type === 'entity.parse.failed'
    if (parseFailure) {
      res.status(400).json({ error_code: 'bad_request', message: 'unparseable body' })
      return
    }
    res.status(500).json({ error_code: 'internal', message: err.message })
  })

  return app
}
