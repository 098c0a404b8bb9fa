"""
A minimal process-based map, used to spread simulation blocks and scan points over CPUs.
The outputs come back in the order of the inputs, whatever order the workers finish in.
"""

import multiprocessing

import logging
logger = logging.getLogger(__name__)


def getncpu(ncpu):
	"""
	Translates the config convention (0 = all cores) into a number of processes.
	"""
	ncpu = int(ncpu)
	if ncpu < 0:
		raise ValueError("ncpu must be >= 0, got {}".format(ncpu))
	if ncpu == 0:
		try:
			ncpu = multiprocessing.cpu_count()
		except NotImplementedError:
			logger.warning("multiprocessing.cpu_count() is not implemented!")
			ncpu = 1
	return ncpu


def _spawn(f):
	"""
	Wraps the worker f so that it sends (True, result) through a pipe, or (False, exception) if f raises.
	"""
	def fun(pipe, x):
		try:
			out = (True, f(x))
		except Exception as e:
			out = (False, e)
		try:
			pipe.send(out)
		except Exception as e:
			# The exception (or result) could not be pickled
			pipe.send((False, RuntimeError("{}: {}".format(type(e).__name__, e))))
		pipe.close()
	return fun


def parmap(f, X, ncpu=1):
	"""
	Returns [f(x) for x in X], computed by at most ncpu processes at a time.

	With ncpu = 1 (or a single item) no process is started at all, which keeps things easy to debug.
	Workers are started with the fork method, so f does not need to be picklable, but its outputs do.
	If some f(x) raises, the remaining workers of the batch are still collected, and the first exception
	(in input order) is raised again in the parent.
	"""
	X = list(X)
	ncpu = getncpu(ncpu)
	if ncpu == 1 or len(X) <= 1:
		return [f(x) for x in X]

	logger.debug("Mapping {} over {} items with {} processes".format(getattr(f, "__name__", f), len(X), ncpu))
	ctx = multiprocessing.get_context("fork")
	outputs = []
	for start in range(0, len(X), ncpu):
		batch = X[start:start + ncpu]
		pipes = [ctx.Pipe(duplex=False) for x in batch]
		processes = [ctx.Process(target=_spawn(f), args=(send, x)) for (x, (recv, send)) in zip(batch, pipes)]
		for (proc, (recv, send)) in zip(processes, pipes):
			proc.start()
			# Only the child keeps the send end, so that recv() sees EOF if it dies
			send.close()
		# recv() before join(), otherwise a large result blocks the child forever.
		results = []
		for (i, (recv, send)) in enumerate(pipes):
			try:
				results.append(recv.recv())
			except EOFError:
				results.append((False, RuntimeError("Worker for item {} died without a result".format(start + i))))
			recv.close()
		for proc in processes:
			proc.join()
		for (ok, value) in results:
			if not ok:
				logger.error("A worker failed: {}: {}".format(type(value).__name__, value))
				raise value
			outputs.append(value)
	return outputs
