import { z } from 'zod'

// The seed travels as a decimal string: JSON numbers cannot carry 64-bit
// integers exactly through every peer.
export const derivationSchema = z.object({
  seed: z.string().regex(/^\d+$/),
  step: z.number().int().nonnegative(),
  parent_slot: z.number().int().nonnegative(),
  sample_slot: z.number().int().nonnegative(),
})

export const imageRefSchema = z.object({
  id: z.string().min(1),
  uri: z.string().nullable().optional(),
  bytes_digest: z
    .string()
    .regex(/^[0-9a-f]{64}$/)
    .nullable()
    .optional(),
})

export const samplingSchema = z.object({
  temperature: z.number().positive(),
  top_k: z.number().int().nonnegative(),
  top_p: z.number().gt(0).lte(1),
  greedy: z.boolean(),
})

export const generationRequestSchema = z.object({
  prompt: z.object({ image: imageRefSchema, text: z.string().min(1) }),
  prefix_sentences: z.array(z.string()),
  sampling: samplingSchema,
  stop_at_sentence_end: z.boolean(),
  remaining_token_budget: z.number().int().min(1),
  derivation: derivationSchema,
})

export const similarityRequestSchema = z.object({
  image: imageRefSchema,
  text: z.string().min(1),
})

export type Derivation = z.infer<typeof derivationSchema>
export type GenerationRequest = z.infer<typeof generationRequestSchema>
export type SimilarityRequest = z.infer<typeof similarityRequestSchema>

export interface GenerationReply {
  sentence_text: string
  tokens: string[]
  token_logprobs: number[]
  end_of_response: boolean
  tokens_consumed: number
  derivation: Derivation
}

export interface SimilarityReply {
  score: number
  truncated?: boolean
}
