"""semconflict: a differential-testing laboratory for semantic conflicts
caused by dependency-version shadowing, over the ModLang subject language.

The pipeline: resolve a workspace's dependency tree the way a flat-classpath
build would (nearest wins, then first declared), enumerate API pairs where a
shadowed implementation is replaced by a loaded one, keep the pairs whose
implementations structurally differ, mine constructor contexts from client
code to seed a search-based test generator, run the generated tests against
the loaded and the shadowed configurations, and report state or outcome
inconsistencies.
"""

__version__ = "0.1.0"
