#!/usr/bin/env node
/**
 * aumi-dump <episode.aumi>
 *
 * Prints the canonical TSV rendering of an episode file. Exit codes match
 * the producing pipeline's tool: 0 success, 1 operational error (one
 * `ErrorType: message` line on stderr), 2 usage.
 */

import { readEpisodeFile } from './episode.js';
import { dumpEpisode } from './dump.js';
import { EpisodeError } from './errors.js';

function main(argv: string[]): number {
  if (argv.length !== 1 || argv[0] === '-h' || argv[0] === '--help') {
    process.stderr.write('usage: aumi-dump <episode.aumi>\n');
    return argv[0] === '-h' || argv[0] === '--help' ? 0 : 2;
  }
  try {
    process.stdout.write(dumpEpisode(readEpisodeFile(argv[0])));
  } catch (exc) {
    if (exc instanceof EpisodeError || (exc instanceof Error && 'code' in exc)) {
      process.stderr.write(`${exc.name}: ${exc.message}\n`);
      return 1;
    }
    throw exc;
  }
  return 0;
}

process.exit(main(process.argv.slice(2)));
