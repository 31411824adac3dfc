"""Binary min-heap with stable handles, supporting delete-by-handle in O(log m)."""


class IndexedHeap:
    """Min-heap of ``(key, item)`` where every entry is addressable by a handle.

    Handles are integers returned by :meth:`push`; they stay valid until the
    entry is popped or deleted. Keys must be mutually comparable.
    """

    def __init__(self):
        self._keys = []
        self._handles = []
        self._items = {}
        self._pos = {}
        self._next = 0

    def __len__(self):
        return len(self._keys)

    def __contains__(self, handle):
        return handle in self._pos

    def push(self, key, item):
        handle = self._next
        self._next += 1
        self._keys.append(key)
        self._handles.append(handle)
        self._items[handle] = item
        self._pos[handle] = len(self._keys) - 1
        self._sift_up(len(self._keys) - 1)
        return handle

    def peek(self):
        if not self._keys:
            raise IndexError("peek from an empty heap")
        h = self._handles[0]
        return self._keys[0], self._items[h], h

    def pop(self):
        """Remove and return ``(key, item)`` of the minimum entry."""
        if not self._keys:
            raise IndexError("pop from an empty heap")
        key, item, handle = self.peek()
        self._remove_at(0)
        del self._items[handle]
        return key, item

    def delete(self, handle):
        """Remove the entry for ``handle`` and return its ``(key, item)``."""
        pos = self._pos[handle]
        key = self._keys[pos]
        item = self._items.pop(handle)
        self._remove_at(pos)
        return key, item

    def items(self):
        """Snapshot of ``(key, item, handle)`` in arbitrary order."""
        return [(k, self._items[h], h) for k, h in zip(self._keys, self._handles)]

    def _remove_at(self, pos):
        keys, handles = self._keys, self._handles
        del self._pos[handles[pos]]
        last = len(keys) - 1
        if pos != last:
            keys[pos] = keys[last]
            handles[pos] = handles[last]
            self._pos[handles[pos]] = pos
        keys.pop()
        handles.pop()
        if pos < len(keys):
            if pos > 0 and keys[pos] < keys[(pos - 1) >> 1]:
                self._sift_up(pos)
            else:
                self._sift_down(pos)

    def _sift_up(self, pos):
        keys, handles, where = self._keys, self._handles, self._pos
        key, handle = keys[pos], handles[pos]
        while pos > 0:
            parent = (pos - 1) >> 1
            if key < keys[parent]:
                keys[pos] = keys[parent]
                handles[pos] = handles[parent]
                where[handles[pos]] = pos
                pos = parent
            else:
                break
        keys[pos] = key
        handles[pos] = handle
        where[handle] = pos

    def _sift_down(self, pos):
        keys, handles, where = self._keys, self._handles, self._pos
        n = len(keys)
        key, handle = keys[pos], handles[pos]
        while True:
            child = 2 * pos + 1
            if child >= n:
                break
            if child + 1 < n and keys[child + 1] < keys[child]:
                child += 1
            if keys[child] < key:
                keys[pos] = keys[child]
                handles[pos] = handles[child]
                where[handles[pos]] = pos
                pos = child
            else:
                break
        keys[pos] = key
        handles[pos] = handle
        where[handle] = pos
