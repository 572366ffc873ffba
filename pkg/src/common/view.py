import sys

from tabulate import tabulate


def print_title(s):
    """
    Print a string as a title with a strong underline

    Args:
        s: string to print as a title
    """
    print(s)
    print(len(s) * "=")
    print("")


def _write(text):
    sys.stdout.flush()
    stream = getattr(sys.stdout, 'buffer', None)
    if stream is None:
        sys.stdout.write(text)
    else:
        stream.write(text.encode('utf-8'))
        stream.flush()
    print("")


def print_entity(entity, title=None):
    """
    Print a mapping as a title along with a two column Name/Value table.

    Args:
        entity: The mapping to print
        title: The title to print
    """

    if title is not None and len(title) > 0:
        print_title(title)

    body = []

    for name, value in entity.items():
        if isinstance(value, (list, tuple)):
            value = "[{}]".format(len(value))
        elif isinstance(value, dict):
            value = "<{} fields>".format(len(value))
        body.append([name, value])

    _write(tabulate(body, [], tablefmt="rst"))


def print_collection(title, entities, columns):
    """
    Print a collection of entities with specified headers and formatters

    Args:
        title: The title to print
        entities: The collection to print, one per row in the table
        columns: Tuple of column header name and column row formatter to be
                 applied to each entity in the collection
    """

    if len(entities) == 0:
        return

    if title is not None and len(title) > 0:
        print_title(title)

    headers = [c[0] for c in columns]
    body = []

    for e in entities:
        body.append([c[1](e) for c in columns])

    _write(tabulate(body, headers, tablefmt="rst", floatfmt=".4f"))
